#pragma once

#include <map>
#include <string>
#include <vector>

namespace semicomp {

using Covariates = std::map<std::string, double>;

// Ordered cut-points tau_0 < ... < tau_K. Interval k (1-based) is (tau_{k-1}, tau_k].
class Partition {
 public:
  explicit Partition(std::vector<double> cuts);
  static Partition equally_spaced(double origin, double width, int count);

  int num_intervals() const { return static_cast<int>(cuts_.size()) - 1; }
  double cut(int k) const { return cuts_.at(static_cast<size_t>(k)); }
  double origin() const { return cuts_.front(); }
  double end() const { return cuts_.back(); }
  const std::vector<double>& cuts() const { return cuts_; }

  // Smallest k with tau_k > t, or K+1 when t >= tau_K.
  int first_cut_above(double t) const;
  // Smallest k >= 1 with tau_k >= t: the closed-right interval holding t.
  int interval_containing(double t) const;
  // Largest k with tau_k <= t, or -1 when t < tau_0.
  int last_cut_at_or_below(double t) const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<double> cuts_;
};

struct SubjectRecord {
  std::string id;
  double entry = 0.0;
  double t1 = 0.0;
  bool d1 = false;
  double t2 = 0.0;
  bool d2 = false;
  Covariates baseline;
  // Interval index -> covariate values measured at tau_{k-1}; carried forward.
  std::map<int, Covariates> time_varying;
};

// Throws DataError when the record's times are inconsistent.
void validate(const SubjectRecord& record);

// Events or censoring beyond tau_K become censoring at tau_K.
SubjectRecord clip_to_partition(SubjectRecord record, const Partition& partition);

enum class CensorMode { DropPartial, RoundUp };

struct IntervalObservation {
  int k = 0;
  int y1_prev = 0;
  int y2_prev = 0;
  int y1 = 0;
  int y2 = 0;
  Covariates covariates;
};

struct SubjectPath {
  std::string id;
  int k_entry = 0;
  int k_exit = 0;
  std::vector<IntervalObservation> observations;

  // False for subjects censored before completing their first interval.
  bool contributes() const { return !observations.empty(); }
};

SubjectPath discretize(const SubjectRecord& record, const Partition& partition, CensorMode mode);

// Covariates in force during interval k: baseline values overlaid with the most
// recent time-varying measurement at or before k.
Covariates covariates_at(const SubjectRecord& record, int k);

std::vector<SubjectPath> discretize_all(const std::vector<SubjectRecord>& records,
                                        const Partition& partition, CensorMode mode);

}  // namespace semicomp
