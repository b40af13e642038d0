#include "qr/kernel/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qr/error.hpp"

namespace qr::kernel {
namespace {

double finite(double v) {
  if (!std::isfinite(v)) throw Error("finite_difference_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckResult finite_difference_check(const std::function<double()>& loss, std::span<Matrix* const> params,
                                        std::span<const Matrix* const> analytic, const GradCheckOptions& options) {
  if (params.size() != analytic.size()) throw Error("finite_difference_check: params/gradients count mismatch");
  finite(loss());
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p]->same_shape(*analytic[p])) {
      throw Error(fmt::format("finite_difference_check: gradient {} has the wrong shape", p));
    }
    auto values = params[p]->values();
    const auto grads = analytic[p]->values();
    std::size_t stride = 1;
    if (options.max_entries_per_param > 0 && values.size() > options.max_entries_per_param) {
      stride = (values.size() + options.max_entries_per_param - 1) / options.max_entries_per_param;
    }
    for (std::size_t i = 0; i < values.size(); i += stride) {
      const double saved = values[i];
      values[i] = saved + options.epsilon;
      const double plus = finite(loss());
      values[i] = saved - options.epsilon;
      const double minus = finite(loss());
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double err =
          std::abs(grads[i] - numeric) / std::max(std::abs(numeric), options.denominator_floor);
      ++result.entries_checked;
      if (result.entries_checked == 1 || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = p;
        result.worst_index = i;
        result.worst_analytic = grads[i];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace qr::kernel
