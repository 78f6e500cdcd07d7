#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "ipcamo/autodiff.hpp"

namespace testutil {

struct FdReport {
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst_excess = 0.0;  // largest |a - n| / tolerance seen
    std::string worst;
};

// Central differences with step eps; an entry passes when
// |analytic - numeric| <= max(rel * max(|analytic|, |numeric|), abs_floor).
inline bool fd_close(double a, double n, double rel = 1e-4, double abs_floor = 1e-6) {
    return std::abs(a - n) <= std::max(rel * std::max(std::abs(a), std::abs(n)), abs_floor);
}

// `loss` evaluates the scalar at the current parameter values; `analytic`
// leaves d loss / d p in every Parameter::grad.
inline FdReport fd_check_params(ipcamo::ParamStore& store, const std::function<double()>& loss,
                                const std::function<void()>& analytic, double eps = 1e-6, double rel = 1e-4,
                                double abs_floor = 1e-6) {
    store.zero_grad();
    analytic();
    FdReport r;
    for (std::size_t k = 0; k < store.size(); ++k) {
        ipcamo::Parameter& p = store.at(k);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double orig = p.value.data[i];
            p.value.data[i] = orig + eps;
            const double up = loss();
            p.value.data[i] = orig - eps;
            const double down = loss();
            p.value.data[i] = orig;
            const double num = (up - down) / (2.0 * eps);
            const double ana = p.grad.data[i];
            ++r.checked;
            const double tol = std::max(rel * std::max(std::abs(ana), std::abs(num)), abs_floor);
            const double excess = std::abs(ana - num) / tol;
            if (excess > r.worst_excess) {
                r.worst_excess = excess;
                r.worst = p.name + "[" + std::to_string(i) + "] analytic " + std::to_string(ana) + " numeric " +
                          std::to_string(num);
            }
            if (!fd_close(ana, num, rel, abs_floor)) ++r.failed;
        }
    }
    return r;
}

}  // namespace testutil
