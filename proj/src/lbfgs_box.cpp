#include "cropt/lbfgs_box.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace cropt {

namespace {

using Vec = std::vector<double>;

void clamp_unit(Vec& x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
}

double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct Pair {
    Vec s, y;
    double rho;
};

// Two-loop recursion for the L-BFGS direction H*g.
Vec apply_inverse_hessian(const std::deque<Pair>& hist, Vec g) {
    std::vector<double> alpha(hist.size());
    for (std::size_t k = hist.size(); k-- > 0;) {
        alpha[k] = hist[k].rho * dot(hist[k].s, g);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= alpha[k] * hist[k].y[i];
    }
    if (!hist.empty()) {
        const auto& last = hist.back();
        const double gamma = dot(last.s, last.y) / std::max(dot(last.y, last.y), 1e-300);
        for (double& v : g) v *= gamma;
    }
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const double beta = hist[k].rho * dot(hist[k].y, g);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += (alpha[k] - beta) * hist[k].s[i];
    }
    return g;
}

// coordinates pinned at a bound the (minimization) gradient pushes against
bool blocked(double x, double g) {
    return (x <= 0.0 && g > 0.0) || (x >= 1.0 && g < 0.0);
}

} // namespace

LbfgsResult maximize_box_lbfgs(const std::function<double(const std::vector<double>&)>& objective,
                               std::vector<double> start, const LbfgsOptions& opt) {
    const std::size_t d = start.size();
    clamp_unit(start);

    // internally minimize -objective
    auto f = [&](const Vec& x) { return -objective(x); };
    auto gradient = [&](const Vec& x) {
        Vec g(d);
        Vec p = x;
        for (std::size_t i = 0; i < d; ++i) {
            const double xi = x[i];
            p[i] = xi + opt.fd_step;
            const double fp = f(p);
            p[i] = xi - opt.fd_step;
            const double fm = f(p);
            p[i] = xi;
            g[i] = (fp - fm) / (2.0 * opt.fd_step);
        }
        return g;
    };

    Vec x = start;
    double fx = f(x);
    Vec g = gradient(x);
    std::deque<Pair> hist;

    LbfgsResult res;

    // one projected backtracking line search along direction dir; returns
    // true and updates (x, fx, g, hist) on success
    auto line_search = [&](const Vec& dir) {
        double gd0 = 0; // directional derivative along the projected move
        double step = 1.0;
        Vec xn(d);
        for (int ls = 0; ls < opt.max_line_search; ++ls) {
            for (std::size_t i = 0; i < d; ++i) xn[i] = std::clamp(x[i] + step * dir[i], 0.0, 1.0);
            const double fn = f(xn);
            gd0 = 0;
            for (std::size_t i = 0; i < d; ++i) gd0 += g[i] * (xn[i] - x[i]);
            if (gd0 < 0 && fn <= fx + 1e-4 * gd0) {
                Vec gn = gradient(xn);
                Vec s(d), yv(d);
                for (std::size_t i = 0; i < d; ++i) {
                    s[i] = xn[i] - x[i];
                    yv[i] = gn[i] - g[i];
                }
                const double sy = dot(s, yv);
                if (sy > 1e-12 * std::sqrt(dot(s, s)) * std::sqrt(dot(yv, yv))) {
                    hist.push_back({std::move(s), std::move(yv), 1.0 / sy});
                    if (static_cast<int>(hist.size()) > opt.memory) hist.pop_front();
                }
                x = xn;
                fx = fn;
                g = std::move(gn);
                return true;
            }
            step *= 0.5;
        }
        return false;
    };

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        res.iterations = iter + 1;

        double pg_norm = 0;
        for (std::size_t i = 0; i < d; ++i)
            pg_norm = std::max(pg_norm, std::abs(std::clamp(x[i] - g[i], 0.0, 1.0) - x[i]));
        if (pg_norm <= opt.projected_grad_tol) {
            res.converged = true;
            break;
        }

        // mask coordinates held by an active bound so the quasi-Newton model
        // works in the free subspace
        Vec gm = g;
        for (std::size_t i = 0; i < d; ++i)
            if (blocked(x[i], g[i])) gm[i] = 0.0;

        Vec dir = apply_inverse_hessian(hist, gm);
        for (std::size_t i = 0; i < d; ++i) dir[i] = blocked(x[i], g[i]) ? 0.0 : -dir[i];

        bool moved = false;
        if (dot(dir, gm) < 0) moved = line_search(dir);
        if (!moved) {
            // quasi-Newton step rejected: drop the curvature model and take a
            // projected steepest-descent step before giving up
            hist.clear();
            Vec sd(d);
            for (std::size_t i = 0; i < d; ++i) sd[i] = blocked(x[i], g[i]) ? 0.0 : -g[i];
            moved = line_search(sd);
        }
        if (!moved) break; // no measurable progress at any step length
    }

    res.x = x;
    res.f = -fx;
    return res;
}

} // namespace cropt
