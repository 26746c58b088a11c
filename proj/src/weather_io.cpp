#include "cropt/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cropt {

namespace {

double parse_number(const std::string& cell, const std::string& where) {
    double v = 0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    detail::require<IngestionError>(ec == std::errc() && ptr == end,
                                    where + ": not a number: '" + cell + "'");
    return v;
}

} // namespace

WeatherArchive load_weather_csv(const std::string& path, const std::string& location_id) {
    std::ifstream in(path);
    detail::require<ArchiveError>(in.good(), "cannot open weather file '" + path + "'");

    std::string line;
    detail::require<IngestionError>(static_cast<bool>(std::getline(in, line)),
                                    path + ": empty weather file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    detail::require<IngestionError>(line == "date,radiation,maxt,mint,rain",
                                    path + ": expected header 'date,radiation,maxt,mint,rain', found '" +
                                        line + "'");

    WeatherArchive archive;
    archive.location_id = location_id;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        const std::string where = path + ":" + std::to_string(line_no);
        detail::require<IngestionError>(cells.size() == 5, where + ": expected 5 columns");
        WeatherDay d;
        d.date = parse_iso_date(cells[0]);
        d.radiation = parse_number(cells[1], where);
        d.max_temp = parse_number(cells[2], where);
        d.min_temp = parse_number(cells[3], where);
        d.rain = parse_number(cells[4], where);
        try {
            d.validate();
        } catch (const DomainError& e) {
            throw IngestionError(where + ": " + e.what());
        }
        archive.years[d.date.year].push_back(d);
    }
    archive.validate();
    return archive;
}

} // namespace cropt
