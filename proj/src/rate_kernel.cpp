#include "cips/rate_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "cips/errors.hpp"

namespace cips {

RateKernel RateKernel::independent_walkers() {
  // c(k,l) = k <= 1 * k * (1+l)
  return RateKernel(KernelFamily::IndependentWalkers, 0.0, 1.0);
}

RateKernel RateKernel::zero_range(double b) {
  if (b < 0.0) throw ConfigError("zero-range parameter b must be >= 0");
  // c(k,l) = 1 + b/k; the worst ratio against k(1+l) is at k=1, l=0.
  return RateKernel(KernelFamily::ZeroRange, b, 1.0 + b);
}

RateKernel RateKernel::inclusion(double d) {
  if (d <= 0.0) throw ConfigError("inclusion parameter d must be > 0");
  // c(k,l) = k(d+l); ratio (d+l)/(1+l) peaks at l=0.
  return RateKernel(KernelFamily::Inclusion, d, std::max(d, 1.0));
}

RateKernel RateKernel::table(std::vector<std::vector<double>> rates) {
  if (rates.empty() || rates.front().empty()) {
    throw ConfigError("rate table must be a nonempty matrix");
  }
  const std::size_t cols = rates.front().size();
  double c_bound = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    if (rates[k].size() != cols) {
      throw ConfigError("rate table rows must have equal length");
    }
    for (std::size_t l = 0; l < cols; ++l) {
      double c = rates[k][l];
      if (k == 0) {
        if (c != 0.0) throw ConfigError("rate table must have c(0,l) = 0");
        continue;
      }
      if (c <= 0.0) throw ConfigError("rate table requires c(k,l) > 0 for k >= 1");
      c_bound = std::max(c_bound, c / (static_cast<double>(k) * (1.0 + static_cast<double>(l))));
    }
  }
  RateKernel kernel(KernelFamily::Table, 0.0, c_bound);
  kernel.table_ = std::move(rates);
  return kernel;
}

double RateKernel::operator()(std::int64_t k, std::int64_t l) const {
  if (k < 0 || l < 0) throw ConfigError("kernel arguments must be nonnegative");
  if (k == 0) return 0.0;
  switch (family_) {
    case KernelFamily::IndependentWalkers:
      return static_cast<double>(k);
    case KernelFamily::ZeroRange:
      return 1.0 + param_ / static_cast<double>(k);
    case KernelFamily::Inclusion:
      return static_cast<double>(k) * (param_ + static_cast<double>(l));
    case KernelFamily::Table: {
      if (static_cast<std::size_t>(k) >= table_.size() ||
          static_cast<std::size_t>(l) >= table_.front().size()) {
        throw ConfigError("rate table lookup out of range: k=" + std::to_string(k) +
                          " l=" + std::to_string(l));
      }
      return table_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
    }
  }
  return 0.0;
}

SublinearityReport RateKernel::certify_sublinearity(std::int64_t k_max, std::int64_t l_max) const {
  if (k_max < 1 || l_max < 1) throw ConfigError("certification grid must be at least 1x1");
  if (family_ == KernelFamily::Table) {
    k_max = std::min<std::int64_t>(k_max, static_cast<std::int64_t>(table_.size()) - 1);
    l_max = std::min<std::int64_t>(l_max, static_cast<std::int64_t>(table_.front().size()) - 1);
  }
  SublinearityReport report;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    for (std::int64_t l = 0; l <= l_max; ++l) {
      double ratio = (*this)(k, l) / (static_cast<double>(k) * (1.0 + static_cast<double>(l)));
      report.c_min = std::max(report.c_min, ratio);
      if (!report.violation && ratio > c_bound_ * (1.0 + 1e-12)) {
        report.violation = {k, l};
      }
    }
  }
  return report;
}

std::string RateKernel::describe() const {
  switch (family_) {
    case KernelFamily::IndependentWalkers:
      return "independent";
    case KernelFamily::ZeroRange:
      return "zero-range(b=" + std::to_string(param_) + ")";
    case KernelFamily::Inclusion:
      return "inclusion(d=" + std::to_string(param_) + ")";
    case KernelFamily::Table:
      return "table(" + std::to_string(table_.size()) + "x" +
             std::to_string(table_.front().size()) + ")";
  }
  return "?";
}

}  // namespace cips
