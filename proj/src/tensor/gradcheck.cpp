#include "ufo/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ufo {

double grad_error(double analytic, double numeric, const GradCheckOptions& opt) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < opt.tiny) return diff <= opt.abs_tolerance ? 0.0 : diff / opt.tiny;
  return diff / scale;
}

double central_difference(ParamStore& store, const std::function<double(ParamStore&)>& loss,
                          std::size_t param, std::size_t index, double step) {
  double& x = store.value(param).data()[index];
  const double saved = x;
  x = saved + step;
  const double up = loss(store);
  x = saved - step;
  const double down = loss(store);
  x = saved;
  return (up - down) / (2.0 * step);
}

GradCheckReport check_gradients(ParamStore& store, const std::function<double(ParamStore&)>& loss,
                                const std::vector<Matrix>& analytic, const GradCheckOptions& opt,
                                const FiniteDifference& numeric_override) {
  GradCheckReport report;
  for (std::size_t p = 0; p < store.size(); ++p) {
    for (std::size_t i = 0; i < store.value(p).size(); ++i) {
      const double num = numeric_override ? numeric_override(store, p, i, opt.step)
                                          : central_difference(store, loss, p, i, opt.step);
      GradCheckEntry e{p, i, analytic[p].data()[i], num, 0.0};
      e.error = grad_error(e.analytic, e.numeric, opt);
      if (report.checked == 0 || e.error > report.worst.error) report.worst = e;
      report.entries.push_back(e);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace ufo
