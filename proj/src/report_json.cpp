#include "tristream/report_json.hpp"

#include <algorithm>
#include <ostream>
#include <vector>

#include <json.hpp>

namespace tristream {

std::string report_to_json(const RunReport& r, int indent) {
  using nlohmann::json;
  const PipelineConfig& c = r.config;
  json j;
  j["config"] = {
      {"algorithm", to_string(c.algorithm)},
      {"workers", c.workers},
      {"budget", c.budget},
      {"theta", c.theta},
      {"seed", c.seed},
      {"aggregation", to_string(c.aggregation)},
      {"execution", to_string(c.execution)},
      {"instrument", c.instrument},
  };
  j["edges"] = r.edges;
  j["global_estimate"] = r.estimates.global();
  j["nodes_with_local_estimate"] = r.estimates.locals().size();
  j["routing"] = {{"lucky", r.lucky}, {"unlucky", r.unlucky}, {"broadcast", r.broadcast}};
  j["worker_loads"] = r.worker_loads;
  j["worker_stored"] = r.worker_stored;
  j["worker_evictions"] = r.worker_evictions;
  if (!r.master_loads.empty()) j["master_loads"] = r.master_loads;
  j["messages"] = {
      {"master_to_worker", r.messages.master_to_worker},
      {"worker_to_aggregator", r.messages.worker_to_aggregator},
      {"query_broadcasts", r.messages.query_broadcasts},
      {"total", r.messages.total()},
  };
  if (r.load_audit) {
    j["load_audit"] = {
        {"follow_assignments", r.load_audit->follow_assignments},
        {"fresh_assignments", r.load_audit->fresh_assignments},
        {"violations", r.load_audit->violations},
    };
  }
  if (!r.replication_histogram.empty()) {
    j["replication_histogram"] = r.replication_histogram;
    j["max_replication"] = r.max_replication();
  }
  j["elapsed_seconds"] = r.elapsed_seconds;
  return j.dump(indent);
}

void write_local_estimates(std::ostream& out, const EstimateStore& estimates) {
  std::vector<std::pair<NodeId, double>> rows(estimates.locals().begin(), estimates.locals().end());
  std::sort(rows.begin(), rows.end());
  const auto old = out.precision(17);
  for (const auto& [u, x] : rows) out << u << ' ' << x << '\n';
  out.precision(old);
}

}  // namespace tristream
