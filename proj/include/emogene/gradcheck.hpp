#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "emogene/errors.hpp"
#include "emogene/tensor.hpp"

namespace emogene {

struct GradCheckFailure {
    std::size_t param_index;
    std::size_t coord;
    double analytic;
    double numeric;
    double rel_error;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t excluded = 0;
    std::vector<GradCheckFailure> failures;
    bool passed(double tol) const { return max_rel_error < tol; }
};

// Central finite-difference check of analytic gradients. loss_fn must be a
// pure function of the parameter tensors; exclude, when set, masks
// coordinates (e.g. near a ReLU kink) from the comparison.
inline GradCheckReport grad_check(
    const std::vector<Tensor<double>*>& params,
    const std::vector<const Tensor<double>*>& analytic,
    const std::function<double()>& loss_fn, double epsilon, double tolerance,
    const std::function<bool(std::size_t, std::size_t)>& exclude = nullptr) {
    GradCheckReport report;
    if (!std::isfinite(loss_fn())) throw NumericError("grad_check: non-finite loss");
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor<double>& t = *params[p];
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (exclude && exclude(p, i)) {
                ++report.excluded;
                continue;
            }
            const double saved = t[i];
            t[i] = saved + epsilon;
            const double lp = loss_fn();
            t[i] = saved - epsilon;
            const double lm = loss_fn();
            t[i] = saved;
            if (!std::isfinite(lp) || !std::isfinite(lm))
                throw NumericError("grad_check: non-finite perturbed loss");
            const double numeric = (lp - lm) / (2.0 * epsilon);
            const double a = analytic[p]->data[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            ++report.checked;
            report.max_rel_error = std::max(report.max_rel_error, rel);
            if (rel >= tolerance)
                report.failures.push_back({p, i, a, numeric, rel});
        }
    }
    return report;
}

}  // namespace emogene
