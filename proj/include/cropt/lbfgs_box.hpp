#pragma once

#include <functional>
#include <vector>

namespace cropt {

struct LbfgsOptions {
    int max_iterations = 200;
    double projected_grad_tol = 1e-8;
    double fd_step = 1e-6; // central-difference step
    int memory = 10;
    int max_line_search = 40;
};

struct LbfgsResult {
    std::vector<double> x;
    double f = 0;
    bool converged = false;
    int iterations = 0;
};

// Limited-memory quasi-Newton maximization over the box [0,1]^d with
// gradient projection and backtracking line search. Gradients come from
// central finite differences of the objective.
LbfgsResult maximize_box_lbfgs(const std::function<double(const std::vector<double>&)>& objective,
                               std::vector<double> start, const LbfgsOptions& options = {});

} // namespace cropt
