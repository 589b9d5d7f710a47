#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "semicomp/timegrid.hpp"

namespace semicomp {

// Subject-level CSV: id,entry,t1,d1,t2,d2 followed by numeric covariate columns.
std::vector<SubjectRecord> read_subjects_csv(std::istream& in, const std::string& source = "<subjects>");

// Long-format time-varying CSV: id,interval_index,name,value. Merged into records.
void read_time_varying_csv(std::istream& in, std::vector<SubjectRecord>& records,
                           const std::string& source = "<time-varying>");

void write_subjects_csv(std::ostream& out, const std::vector<SubjectRecord>& records);
void write_time_varying_csv(std::ostream& out, const std::vector<SubjectRecord>& records);

}  // namespace semicomp
