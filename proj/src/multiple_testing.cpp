#include "ptlab/multiple_testing.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ptlab/error.hpp"

namespace ptlab {
namespace {

// Indices that sort p ascending; stable so tied hypotheses keep their order.
std::vector<std::size_t> ascending_order(std::span<const double> p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return p[l] < p[r]; });
  return order;
}

std::vector<double> holm(std::span<const double> p) {
  const std::size_t k = p.size();
  const auto order = ascending_order(p);
  std::vector<double> out(k);
  double running = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    running = std::max(running, std::min(1.0, static_cast<double>(k - r) * p[order[r]]));
    out[order[r]] = running;
  }
  return out;
}

std::vector<double> hochberg(std::span<const double> p) {
  const std::size_t k = p.size();
  const auto order = ascending_order(p);
  std::vector<double> out(k);
  double running = 1.0;
  for (std::size_t r = k; r-- > 0;) {
    running = std::min(running, static_cast<double>(k - r) * p[order[r]]);
    out[order[r]] = std::min(1.0, running);
  }
  return out;
}

// Closed-testing shortcut with Simes local tests (the algorithm used by R's p.adjust).
std::vector<double> hommel(std::span<const double> raw) {
  const std::size_t n = raw.size();
  if (n <= 1) return {raw.begin(), raw.end()};
  const auto order = ascending_order(raw);
  std::vector<double> p(n);
  for (std::size_t r = 0; r < n; ++r) p[r] = raw[order[r]];

  double simes_all = 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    simes_all = std::min(simes_all, static_cast<double>(n) * p[r] / static_cast<double>(r + 1));
  }
  std::vector<double> q(n, simes_all);
  std::vector<double> pa(n, simes_all);
  for (std::size_t m = n - 1; m >= 2; --m) {
    const std::size_t head = n - m + 1;  // sizes of i1; i2 = [head, n)
    double q1 = 1e300;
    for (std::size_t r = head; r < n; ++r) {
      q1 = std::min(q1, static_cast<double>(m) * p[r] / static_cast<double>(r - head + 2));
    }
    for (std::size_t r = 0; r < head; ++r) q[r] = std::min(static_cast<double>(m) * p[r], q1);
    for (std::size_t r = head; r < n; ++r) q[r] = q[head - 1];
    for (std::size_t r = 0; r < n; ++r) pa[r] = std::max(pa[r], q[r]);
  }
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) out[order[r]] = std::min(1.0, std::max(pa[r], p[r]));
  return out;
}

}  // namespace

std::string_view to_string(Adjustment method) {
  switch (method) {
    case Adjustment::kBonferroni: return "bonferroni";
    case Adjustment::kHolm: return "holm";
    case Adjustment::kHochberg: return "hochberg";
    case Adjustment::kHommel: return "hommel";
  }
  return "unknown";
}

Adjustment parse_adjustment(std::string_view name) {
  for (Adjustment a : {Adjustment::kBonferroni, Adjustment::kHolm, Adjustment::kHochberg,
                       Adjustment::kHommel}) {
    if (name == to_string(a)) return a;
  }
  raise(ErrorKind::kInvalidInput, "unknown adjustment method '" + std::string(name) + "'");
}

std::vector<double> adjust_pvalues(std::span<const double> raw, Adjustment method) {
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (!(raw[r] >= 0.0 && raw[r] <= 1.0)) {
      raise(ErrorKind::kDomain, "p-value " + std::to_string(r) + " is outside [0, 1]");
    }
  }
  switch (method) {
    case Adjustment::kBonferroni: {
      std::vector<double> out(raw.size());
      const double k = static_cast<double>(raw.size());
      std::transform(raw.begin(), raw.end(), out.begin(),
                     [k](double p) { return std::min(1.0, k * p); });
      return out;
    }
    case Adjustment::kHolm: return holm(raw);
    case Adjustment::kHochberg: return hochberg(raw);
    case Adjustment::kHommel: return hommel(raw);
  }
  return {raw.begin(), raw.end()};
}

}  // namespace ptlab
