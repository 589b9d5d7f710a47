#include "semicomp/timegrid.hpp"

#include <algorithm>
#include <cmath>

#include "semicomp/errors.hpp"

namespace semicomp {

Partition::Partition(std::vector<double> cuts) : cuts_(std::move(cuts)) {
  if (cuts_.size() < 3) {
    throw ConfigurationError("partition needs at least two intervals (K >= 2)");
  }
  for (size_t k = 0; k < cuts_.size(); ++k) {
    if (!std::isfinite(cuts_[k])) throw ConfigurationError("partition cut-points must be finite");
    if (k > 0 && !(cuts_[k - 1] < cuts_[k])) {
      throw ConfigurationError("partition cut-points must be strictly increasing");
    }
  }
}

Partition Partition::equally_spaced(double origin, double width, int count) {
  if (!(width > 0.0)) throw ConfigurationError("partition width must be positive");
  std::vector<double> cuts(static_cast<size_t>(count) + 1);
  for (int k = 0; k <= count; ++k) cuts[static_cast<size_t>(k)] = origin + width * k;
  return Partition(std::move(cuts));
}

int Partition::first_cut_above(double t) const {
  auto it = std::upper_bound(cuts_.begin(), cuts_.end(), t);
  return static_cast<int>(it - cuts_.begin());
}

int Partition::interval_containing(double t) const {
  auto it = std::lower_bound(cuts_.begin() + 1, cuts_.end(), t);
  return static_cast<int>(it - cuts_.begin());
}

int Partition::last_cut_at_or_below(double t) const {
  return first_cut_above(t) - 1;
}

void validate(const SubjectRecord& r) {
  auto fail = [&](const std::string& what) {
    throw DataError("subject '" + r.id + "': " + what);
  };
  if (!std::isfinite(r.entry) || !std::isfinite(r.t1) || !std::isfinite(r.t2)) {
    fail("times must be finite");
  }
  if (r.entry > r.t1) fail("entry after t1");
  if (r.t1 > r.t2) fail("t1 after t2");
  if (r.d1 && !(r.t1 > r.entry)) fail("non-terminal event at or before entry");
  if (r.d2 && !(r.t2 > r.entry)) fail("terminal event at or before entry");
}

SubjectRecord clip_to_partition(SubjectRecord r, const Partition& partition) {
  const double end = partition.end();
  if (r.t2 > end) {
    r.t2 = end;
    r.d2 = false;
  }
  if (r.t1 > end) {
    r.t1 = end;
    r.d1 = false;
  }
  if (!r.d1) r.t1 = r.t2;
  return r;
}

Covariates covariates_at(const SubjectRecord& record, int k) {
  Covariates out = record.baseline;
  for (const auto& [index, values] : record.time_varying) {
    if (index > k) break;
    for (const auto& [name, value] : values) out[name] = value;
  }
  return out;
}

SubjectPath discretize(const SubjectRecord& record, const Partition& partition, CensorMode mode) {
  validate(record);
  if (record.entry < partition.origin()) {
    throw DataError("subject '" + record.id + "': entry precedes partition origin");
  }
  if (record.t2 > partition.end()) {
    throw DataError("subject '" + record.id + "': event beyond partition");
  }

  const int K = partition.num_intervals();
  SubjectPath path;
  path.id = record.id;
  path.k_entry = partition.first_cut_above(record.entry);

  if (record.d2) {
    path.k_exit = partition.interval_containing(record.t2);
  } else if (mode == CensorMode::DropPartial) {
    path.k_exit = partition.last_cut_at_or_below(record.t2);
  } else {
    path.k_exit = std::min(partition.first_cut_above(record.t2), K);
  }
  if (path.k_exit < path.k_entry) return path;

  int y1 = 0;
  for (int k = path.k_entry; k <= path.k_exit; ++k) {
    IntervalObservation obs;
    obs.k = k;
    obs.y1_prev = y1;
    obs.y2_prev = 0;
    const double tau = partition.cut(k);
    obs.y1 = (record.d1 && record.t1 <= tau) ? 1 : 0;
    obs.y2 = (record.d2 && record.t2 <= tau) ? 1 : 0;
    obs.covariates = covariates_at(record, k);
    y1 = obs.y1;
    path.observations.push_back(std::move(obs));
  }
  return path;
}

std::vector<SubjectPath> discretize_all(const std::vector<SubjectRecord>& records,
                                        const Partition& partition, CensorMode mode) {
  std::vector<SubjectPath> paths;
  paths.reserve(records.size());
  for (const auto& r : records) paths.push_back(discretize(r, partition, mode));
  return paths;
}

}  // namespace semicomp
