#pragma once

// Robust windowed-mean estimators over per-example loss histories, the
// concentration half-widths that back them, and the selection scores built
// from the two.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cnlcu {

/// Which quantity an example is ranked by when a minibatch is filtered.
enum class CriterionFamily {
  CurrentLoss,          // latest loss only (classic small-loss selection)
  PlainMean,            // windowed arithmetic mean, no bound
  CnlcuSoft,            // soft estimator minus its confidence width
  CnlcuHard,            // hard estimator minus its confidence width
  SoftNoBound,          // soft estimator alone
  HardNoBound,          // hard estimator alone
  CurrentPlusSoftBound, // latest loss minus the soft-family width
  CurrentPlusHardBound, // latest loss minus the hard-family width
};

std::string_view to_string(CriterionFamily family);
/// Accepts the CLI spellings (current, mean, cnlcu-s, ...). Throws
/// std::invalid_argument on anything else.
CriterionFamily parse_criterion(std::string_view name);

bool uses_soft_bound(CriterionFamily family);
bool uses_hard_bound(CriterionFamily family);
bool uses_hard_estimate(CriterionFamily family);

struct CriterionConfig {
  CriterionFamily family = CriterionFamily::CnlcuSoft;
  double sigma2 = 1e-2;
  double tau_min = 1e-2;
  double loss_bound = 4.605170185988092; // 2 log 10
  std::size_t window = 5;
  double contamination = 0.1;
  std::size_t knn_k = 0; // 0 selects max(1, floor(sqrt(t)))

  /// Throws std::invalid_argument when a scalar is out of range.
  void validate() const;
};

/// Window length used when none is given: 5 for the soft families, 12 for
/// the hard ones, 1 for plain current-loss selection.
std::size_t default_window(CriterionFamily family);

struct BoundReport {
  double estimate = 0.0;
  double bound_term = 0.0;
  double score = 0.0;
  std::size_t t = 0;
  std::size_t n_t_effective = 1;
  std::size_t t_o = 0;
};

struct TruncatedWindow {
  std::vector<double> kept; // survivors in their original order
  std::size_t removed = 0;  // t_o
};

/// log(1 + x + x^2/2). Throws std::domain_error for negative or NaN input.
double psi(double x);

double plain_mean(std::span<const double> window);
double soft_mean(std::span<const double> window);

/// Indices ordered by descending k-distance (distance to the k-th nearest
/// other value), ties by descending value then ascending index.
/// Requires t >= 2 and 1 <= k < t.
std::vector<std::size_t> knn_outlier_order(std::span<const double> window,
                                           std::size_t k);

/// k = 0 picks the default neighbourhood size for the window length.
TruncatedWindow hard_truncate(std::span<const double> window,
                              double contamination, std::size_t k = 0);

struct HardMean {
  double estimate = 0.0;
  std::size_t t_o = 0;
};
HardMean hard_mean(std::span<const double> window, double contamination,
                   std::size_t k = 0);

std::size_t default_knn_k(std::size_t t);
std::size_t outlier_count(std::size_t t, double contamination);

/// Deviation bound of the soft estimator over n observations with variance
/// proxy sigma2, holding with probability at least 1 - 2 eps.
double theorem1_halfwidth(std::size_t n, double sigma2, double eps);

/// Deviation bound of the hard estimator over n observations bounded by Z in
/// absolute value after n_o removals, for a chain with mixing-time proxy
/// tau_min; holds with probability at least 1 - eps1 - eps2.
double theorem2_halfwidth(std::size_t n, std::size_t n_o, double Z,
                          double tau_min, double eps1, double eps2);

/// Exploration width subtracted by the soft criterion.
double soft_bound_term(std::size_t t, std::size_t n_t, double sigma2);
/// Exploration width subtracted by the hard criterion.
double hard_bound_term(std::size_t t, std::size_t t_o, std::size_t n_t,
                       double tau_min, double loss_bound);

/// Selection score of one example: estimate - bound_term. n_t is floored at 1.
BoundReport score(std::span<const double> window, std::size_t n_t,
                  const CriterionConfig& cfg);

} // namespace cnlcu
