#pragma once

#include <iosfwd>
#include <string>

#include "tristream/pipeline.hpp"

namespace tristream {

/// Summary of a run as a JSON object: configuration, global estimate, routing
/// and message counters, per-worker loads, timing. Local estimates are left
/// out; use write_local_estimates for those.
std::string report_to_json(const RunReport& r, int indent = 2);

/// One "node estimate" line per node with a local estimate, sorted by node.
void write_local_estimates(std::ostream& out, const EstimateStore& estimates);

}  // namespace tristream
