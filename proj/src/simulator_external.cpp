#include "cropt/simulator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace cropt {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    detail::require<IngestionError>(in.good(), "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    detail::require<EvaluationError>(out.good(), "cannot write '" + path.string() + "'");
}

std::string substitute(std::string text, const std::vector<std::pair<std::string, std::string>>& vars) {
    for (const auto& [name, value] : vars) {
        const std::string token = "{{" + name + "}}";
        std::size_t pos = 0;
        while ((pos = text.find(token, pos)) != std::string::npos) {
            text.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return text;
}

std::string format_value(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

std::string weather_csv(const Scenario& s) {
    std::ostringstream out;
    out << "date,radiation,maxt,mint,rain\n";
    out.precision(17);
    for (const auto& d : s.days)
        out << to_iso(d.date) << ',' << d.radiation << ',' << d.max_temp << ',' << d.min_temp << ','
            << d.rain << '\n';
    return out.str();
}

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output; // stdout + stderr interleaved
};

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& workdir,
                          double timeout_seconds) {
    int pipefd[2];
    detail::require<EvaluationError>(pipe(pipefd) == 0, "pipe() failed");

    const pid_t pid = fork();
    detail::require<EvaluationError>(pid >= 0, "fork() failed");
    if (pid == 0) {
        ::close(pipefd[0]);
        ::dup2(pipefd[1], STDOUT_FILENO);
        ::dup2(pipefd[1], STDERR_FILENO);
        ::close(pipefd[1]);
        if (chdir(workdir.c_str()) != 0) _exit(126);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }

    ::close(pipefd[1]);
    fcntl(pipefd[0], F_SETFL, O_NONBLOCK);

    ProcessResult res;
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    bool child_done = false;
    int status = 0;
    char buf[4096];
    while (true) {
        struct pollfd pfd{pipefd[0], POLLIN, 0};
        poll(&pfd, 1, 50);
        ssize_t n;
        bool eof = false;
        while ((n = read(pipefd[0], buf, sizeof(buf))) > 0) res.output.append(buf, static_cast<std::size_t>(n));
        if (n == 0 || (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) eof = true;
        if (!child_done) {
            const pid_t w = waitpid(pid, &status, WNOHANG);
            if (w == pid) child_done = true;
        }
        if (child_done && eof) break; // child exited and pipe drained
        if (!child_done && std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            res.timed_out = true;
            break;
        }
    }
    ::close(pipefd[0]);
    if (!res.timed_out)
        res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return res;
}

double parse_output(const std::string& rule, const fs::path& workdir, const std::string& proc_output) {
    if (rule.rfind("csv:", 0) == 0) {
        const auto rest = rule.substr(4);
        const auto sep = rest.rfind(':');
        detail::require<DomainError>(sep != std::string::npos, "output rule needs csv:<file>:<column>");
        const std::string file = rest.substr(0, sep);
        const std::string column = rest.substr(sep + 1);
        std::ifstream in(workdir / file);
        if (!in.good()) throw EvaluationError("output file '" + file + "' not produced");
        std::string header, row;
        if (!std::getline(in, header) || !std::getline(in, row))
            throw EvaluationError("output file '" + file + "' has no data row");
        auto split = [](const std::string& line) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            return cells;
        };
        const auto names = split(header);
        const auto cells = split(row);
        const auto it = std::find(names.begin(), names.end(), column);
        if (it == names.end())
            throw EvaluationError("column '" + column + "' not in output file '" + file + "'");
        const auto idx = static_cast<std::size_t>(it - names.begin());
        if (idx >= cells.size()) throw EvaluationError("output row shorter than header");
        try {
            return std::stod(cells[idx]);
        } catch (const std::exception&) {
            throw EvaluationError("cannot parse yield value '" + cells[idx] + "'");
        }
    }
    if (rule.rfind("regex:", 0) == 0) {
        const std::regex pattern(rule.substr(6));
        std::smatch m;
        if (!std::regex_search(proc_output, m, pattern) || m.size() < 2)
            throw EvaluationError("output did not match the extraction pattern; captured output:\n" +
                                  proc_output);
        try {
            return std::stod(m[1].str());
        } catch (const std::exception&) {
            throw EvaluationError("captured group '" + m[1].str() + "' is not a number");
        }
    }
    throw DomainError("unknown output rule '" + rule + "'");
}

} // namespace

void ExternalAdapterConfig::validate() const {
    detail::require(!template_path.empty(), "adapter needs a template file");
    detail::require(!command.empty(), "adapter needs a command");
    detail::require(output_rule.rfind("csv:", 0) == 0 || output_rule.rfind("regex:", 0) == 0,
                    "output rule must be csv:<file>:<column> or regex:<pattern>");
    detail::require(timeout_seconds > 0, "timeout must be positive");
}

ExternalEvaluator::ExternalEvaluator(ExternalAdapterConfig config, const DecisionSpace& space)
    : config_(std::move(config)), space_(space) {
    config_.validate();
    template_text_ = read_file(config_.template_path);
    template_hash_ = fnv1a(template_text_);
}

std::string ExternalEvaluator::cache_key(const DecisionVector& x, const Scenario& s) const {
    std::uint64_t h = template_hash_;
    for (int level : x.levels) h = fnv1a(std::string_view(reinterpret_cast<const char*>(&level), sizeof(level)), h);
    h = fnv1a(s.id, h);
    for (const auto& d : s.days) {
        const double vals[4] = {d.radiation, d.max_temp, d.min_temp, d.rain};
        h = fnv1a(std::string_view(reinterpret_cast<const char*>(vals), sizeof(vals)), h);
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double ExternalEvaluator::evaluate(const DecisionVector& x, const Scenario& s) const {
    x.validate(space_);
    const std::string key = cache_key(x, s);

    fs::path cache_file;
    if (!config_.cache_dir.empty()) {
        cache_file = fs::path(config_.cache_dir) / (key + ".txt");
        std::ifstream hit(cache_file);
        double cached;
        if (hit.good() && (hit >> cached)) return cached;
    }

    const fs::path root = config_.work_root.empty() ? fs::temp_directory_path() : fs::path(config_.work_root);
    fs::create_directories(root);
    const fs::path workdir = root / ("run-" + key + "-" + std::to_string(::getpid()));
    fs::create_directories(workdir);

    std::vector<std::pair<std::string, std::string>> vars;
    const auto values = x.values(space_);
    for (std::size_t i = 0; i < space_.dims(); ++i)
        vars.emplace_back(space_.variable(i).name, format_value(values[i]));
    const fs::path weather_path = workdir / "weather.csv";
    write_file(weather_path, weather_csv(s));
    vars.emplace_back("weather_file", weather_path.string());
    vars.emplace_back("scenario_id", s.id);
    const fs::path input_path = workdir / fs::path(config_.template_path).filename();
    vars.emplace_back("input_file", input_path.string());

    write_file(input_path, substitute(template_text_, vars));
    std::vector<std::string> argv;
    argv.reserve(config_.command.size());
    for (const auto& a : config_.command) argv.push_back(substitute(a, vars));

    invocations_.fetch_add(1);
    const auto res = run_process(argv, workdir, config_.timeout_seconds);
    if (res.timed_out)
        throw EvaluationError("external model timed out after " +
                              std::to_string(config_.timeout_seconds) + " s; partial output:\n" +
                              res.output);
    if (res.exit_code != 0)
        throw EvaluationError("external model exited with code " + std::to_string(res.exit_code) +
                              "; output:\n" + res.output);
    const double yield = parse_output(config_.output_rule, workdir, res.output);
    if (!std::isfinite(yield) || yield < 0)
        throw EvaluationError("external model produced invalid yield " + std::to_string(yield));

    if (!config_.cache_dir.empty()) {
        fs::create_directories(config_.cache_dir);
        const fs::path tmp = cache_file.string() + ".tmp" + std::to_string(::getpid());
        write_file(tmp, format_value(yield) + "\n");
        fs::rename(tmp, cache_file); // atomic publish; identical values by purity
    }
    fs::remove_all(workdir);
    return yield;
}

} // namespace cropt
