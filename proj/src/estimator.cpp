#include "cnlcu/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cnlcu {

namespace {

void require_non_empty(std::span<const double> window, const char* what) {
  if (window.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty loss window");
  }
}

} // namespace

std::string_view to_string(CriterionFamily family) {
  switch (family) {
  case CriterionFamily::CurrentLoss: return "current";
  case CriterionFamily::PlainMean: return "mean";
  case CriterionFamily::CnlcuSoft: return "cnlcu-s";
  case CriterionFamily::CnlcuHard: return "cnlcu-h";
  case CriterionFamily::SoftNoBound: return "soft-nobound";
  case CriterionFamily::HardNoBound: return "hard-nobound";
  case CriterionFamily::CurrentPlusSoftBound: return "current-soft";
  case CriterionFamily::CurrentPlusHardBound: return "current-hard";
  }
  return "?";
}

CriterionFamily parse_criterion(std::string_view name) {
  for (auto f : {CriterionFamily::CurrentLoss, CriterionFamily::PlainMean,
                 CriterionFamily::CnlcuSoft, CriterionFamily::CnlcuHard,
                 CriterionFamily::SoftNoBound, CriterionFamily::HardNoBound,
                 CriterionFamily::CurrentPlusSoftBound,
                 CriterionFamily::CurrentPlusHardBound}) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown criterion '" + std::string(name) + "'");
}

bool uses_soft_bound(CriterionFamily family) {
  return family == CriterionFamily::CnlcuSoft ||
         family == CriterionFamily::CurrentPlusSoftBound;
}

bool uses_hard_bound(CriterionFamily family) {
  return family == CriterionFamily::CnlcuHard ||
         family == CriterionFamily::CurrentPlusHardBound;
}

bool uses_hard_estimate(CriterionFamily family) {
  return family == CriterionFamily::CnlcuHard ||
         family == CriterionFamily::HardNoBound;
}

std::size_t default_window(CriterionFamily family) {
  switch (family) {
  case CriterionFamily::CurrentLoss: return 1;
  case CriterionFamily::CnlcuHard:
  case CriterionFamily::HardNoBound:
  case CriterionFamily::CurrentPlusHardBound: return 12;
  default: return 5;
  }
}

void CriterionConfig::validate() const {
  if (!(sigma2 > 0.0 && sigma2 < 1.0)) {
    throw std::invalid_argument("sigma2 must lie in (0, 1)");
  }
  if (!(tau_min > 0.0)) throw std::invalid_argument("tau_min must be positive");
  if (!(loss_bound > 0.0)) {
    throw std::invalid_argument("loss bound must be positive");
  }
  if (window < 1) throw std::invalid_argument("window must be at least 1");
  if (!(contamination >= 0.0 && contamination <= 0.5)) {
    throw std::invalid_argument("contamination must lie in [0, 0.5]");
  }
}

double psi(double x) {
  if (!(x >= 0.0)) throw std::domain_error("psi: argument must be >= 0");
  // x^2 overflows long before the logarithm does.
  if (x > 1e150) return 2.0 * std::log(x) - std::log(2.0);
  return std::log1p(x + 0.5 * x * x);
}

double plain_mean(std::span<const double> window) {
  require_non_empty(window, "plain_mean");
  return std::accumulate(window.begin(), window.end(), 0.0) /
         static_cast<double>(window.size());
}

double soft_mean(std::span<const double> window) {
  require_non_empty(window, "soft_mean");
  double sum = 0.0;
  for (double v : window) sum += psi(v);
  return sum / static_cast<double>(window.size());
}

std::size_t default_knn_k(std::size_t t) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(t)))));
}

std::size_t outlier_count(std::size_t t, double contamination) {
  if (t < 3 || contamination <= 0.0) return 0;
  // Slack keeps products such as 0.1 * 30 from rounding up past an integer.
  const auto raw = static_cast<std::size_t>(
      std::ceil(contamination * static_cast<double>(t) - 1e-9));
  return std::min(raw, t - 1);
}

std::vector<std::size_t> knn_outlier_order(std::span<const double> window,
                                           std::size_t k) {
  const std::size_t t = window.size();
  if (t < 2) throw std::invalid_argument("knn_outlier_order: need t >= 2");
  if (k < 1 || k >= t) {
    throw std::invalid_argument("knn_outlier_order: need 1 <= k < t");
  }

  std::vector<std::size_t> by_value(t);
  std::iota(by_value.begin(), by_value.end(), 0);
  std::sort(by_value.begin(), by_value.end(), [&](std::size_t a, std::size_t b) {
    return window[a] < window[b] || (window[a] == window[b] && a < b);
  });

  // In one dimension the k nearest neighbours of a point form a contiguous
  // run around it in sorted order, so walk outwards k steps.
  std::vector<double> kdist(t);
  for (std::size_t p = 0; p < t; ++p) {
    const double v = window[by_value[p]];
    std::size_t left = p, right = p;
    double d = 0.0;
    for (std::size_t step = 0; step < k; ++step) {
      const double dl = left > 0 ? v - window[by_value[left - 1]] : HUGE_VAL;
      const double dr = right + 1 < t ? window[by_value[right + 1]] - v : HUGE_VAL;
      if (dl <= dr) {
        d = dl;
        --left;
      } else {
        d = dr;
        ++right;
      }
    }
    kdist[by_value[p]] = d;
  }

  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (kdist[a] != kdist[b]) return kdist[a] > kdist[b];
    if (window[a] != window[b]) return window[a] > window[b];
    return a < b;
  });
  return order;
}

TruncatedWindow hard_truncate(std::span<const double> window,
                              double contamination, std::size_t k) {
  require_non_empty(window, "hard_truncate");
  if (!(contamination >= 0.0 && contamination < 1.0)) {
    throw std::invalid_argument("hard_truncate: contamination must be in [0, 1)");
  }
  const std::size_t t = window.size();
  TruncatedWindow out;
  out.removed = outlier_count(t, contamination);
  if (out.removed == 0) {
    out.kept.assign(window.begin(), window.end());
    return out;
  }
  if (k == 0) k = default_knn_k(t);
  k = std::min(k, t - 1);

  const auto order = knn_outlier_order(window, k);
  std::vector<bool> drop(t, false);
  for (std::size_t i = 0; i < out.removed; ++i) drop[order[i]] = true;
  out.kept.reserve(t - out.removed);
  for (std::size_t i = 0; i < t; ++i) {
    if (!drop[i]) out.kept.push_back(window[i]);
  }
  return out;
}

HardMean hard_mean(std::span<const double> window, double contamination,
                   std::size_t k) {
  auto truncated = hard_truncate(window, contamination, k);
  return {plain_mean(truncated.kept), truncated.removed};
}

double theorem1_halfwidth(std::size_t n, double sigma2, double eps) {
  const double nd = static_cast<double>(n);
  if (!(sigma2 > 0.0) || sigma2 >= nd) {
    throw std::domain_error("theorem1_halfwidth: need 0 < sigma2 < n");
  }
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::domain_error("theorem1_halfwidth: eps must be in (0, 1)");
  }
  return sigma2 * (nd + sigma2 * std::log(1.0 / eps) / (nd * nd)) / (nd - sigma2);
}

double theorem2_halfwidth(std::size_t n, std::size_t n_o, double Z,
                          double tau_min, double eps1, double eps2) {
  if (n_o >= n) throw std::domain_error("theorem2_halfwidth: need n_o < n");
  if (!(eps1 > 0.0 && eps1 < 1.0) || !(eps2 > 0.0 && eps2 < 1.0)) {
    throw std::domain_error("theorem2_halfwidth: eps must be in (0, 1)");
  }
  if (Z < 0.0 || tau_min < 0.0) {
    throw std::domain_error("theorem2_halfwidth: Z and tau_min must be >= 0");
  }
  const double nd = static_cast<double>(n);
  const double nod = static_cast<double>(n_o);
  const double main = 2.0 * Z * std::sqrt(2.0 * tau_min * std::log(2.0 / eps1));
  const double removal =
      (2.0 * Z * nod / nd) * std::sqrt(2.0 * tau_min * std::log(2.0 * nd / eps2));
  return (main + removal) / (nd - nod);
}

double soft_bound_term(std::size_t t, std::size_t n_t, double sigma2) {
  const double td = static_cast<double>(t);
  const double nd = static_cast<double>(std::max<std::size_t>(n_t, 1));
  return sigma2 * (td + sigma2 * std::log(2.0 * td) / (td * td)) / (nd - sigma2);
}

double hard_bound_term(std::size_t t, std::size_t t_o, std::size_t n_t,
                       double tau_min, double loss_bound) {
  const double td = static_cast<double>(t);
  const double tod = static_cast<double>(t_o);
  const double nd = static_cast<double>(std::max<std::size_t>(n_t, 1));
  return 2.0 * std::sqrt(2.0 * tau_min) * loss_bound *
         (td + std::sqrt(2.0) * tod) / ((td - tod) * std::sqrt(td)) *
         std::sqrt(std::log(4.0 * td) / nd);
}

BoundReport score(std::span<const double> window, std::size_t n_t,
                  const CriterionConfig& cfg) {
  cfg.validate();
  require_non_empty(window, "score");
  const std::size_t t = window.size();
  if (n_t > t) throw std::invalid_argument("score: n_t exceeds window length");

  BoundReport r;
  r.t = t;
  r.n_t_effective = std::max<std::size_t>(n_t, 1);

  const auto family = cfg.family;
  std::size_t t_o = 0;
  switch (family) {
  case CriterionFamily::CurrentLoss:
  case CriterionFamily::CurrentPlusSoftBound:
  case CriterionFamily::CurrentPlusHardBound:
    r.estimate = window.back();
    break;
  case CriterionFamily::PlainMean:
    r.estimate = plain_mean(window);
    break;
  case CriterionFamily::CnlcuSoft:
  case CriterionFamily::SoftNoBound:
    r.estimate = soft_mean(window);
    break;
  case CriterionFamily::CnlcuHard:
  case CriterionFamily::HardNoBound: {
    const auto h = hard_mean(window, cfg.contamination, cfg.knn_k);
    r.estimate = h.estimate;
    t_o = h.t_o;
    break;
  }
  }

  if (uses_soft_bound(family)) {
    r.bound_term = soft_bound_term(t, r.n_t_effective, cfg.sigma2);
  } else if (uses_hard_bound(family)) {
    if (family == CriterionFamily::CurrentPlusHardBound) {
      t_o = outlier_count(t, cfg.contamination);
    }
    r.bound_term =
        hard_bound_term(t, t_o, r.n_t_effective, cfg.tau_min, cfg.loss_bound);
  }
  if (uses_hard_bound(family) || uses_hard_estimate(family)) r.t_o = t_o;
  r.score = r.estimate - r.bound_term;
  return r;
}

} // namespace cnlcu
