#include "caai/rating.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "caai/errors.hpp"
#include "caai/parameters.hpp"
#include "caai/plant.hpp"

namespace caai {

namespace {

constexpr double kTiny = 1e-12;

double ratio(double v, double base) { return v / std::max(std::abs(base), kTiny); }

// Min-max scaling where smaller raw values are better when `lower_better`.
std::vector<double> min_max(const std::vector<double>& v, bool lower_better) {
  if (v.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(v.size(), 1.0);
  if (hi - lo <= 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = lower_better ? (hi - v[i]) / (hi - lo) : (v[i] - lo) / (hi - lo);
  return out;
}

}  // namespace

void RatingWeights::validate() const {
  const double w[] = {objective, memory, cpu};
  validate_weights(w);
}

const RatingRow* RatingTable::find(const std::string& pipeline) const {
  for (const auto& r : rows)
    if (r.pipeline == pipeline) return &r;
  return nullptr;
}

std::string terminal_of(const std::string& pipeline_id) {
  const auto pos = pipeline_id.rfind('+');
  return pos == std::string::npos ? pipeline_id : pipeline_id.substr(pos + 1);
}

RatingResult rate_pipelines(std::span<const EvaluationRecord> records, const std::string& baseline_id,
                            const RatingWeights& w) {
  w.validate();
  using Group = std::pair<std::string, std::size_t>;
  std::map<Group, const EvaluationRecord*> base;
  std::set<Group> groups;
  for (const auto& r : records) {
    groups.insert({r.instance, r.budget});
    if (r.pipeline == baseline_id) base[{r.instance, r.budget}] = &r;
  }
  for (const auto& g : groups)
    if (!base.contains(g))
      throw MissingBaseline("no '" + baseline_id + "' record for instance " + g.first + " at budget " +
                            std::to_string(g.second));

  struct Acc {
    double imp = 0, mem = 0, cpu = 0;
    int n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    const EvaluationRecord& b = *base.at({r.instance, r.budget});
    // Minimization: positive when the pipeline beats the baseline.
    const double diff = b.best_y - r.best_y;
    const double imp = std::abs(b.best_y) < kTiny ? diff : diff / std::abs(b.best_y);
    auto& a = acc[r.pipeline];
    a.imp += imp;
    a.mem += ratio(r.memory_bytes, b.memory_bytes);
    a.cpu += ratio(r.cpu_time, b.cpu_time);
    ++a.n;
  }

  std::vector<RatingRow> all;
  for (const auto& [id, a] : acc) {
    RatingRow row;
    row.pipeline = id;
    row.improvement = a.imp / a.n;
    row.mem_ratio = a.mem / a.n;
    row.cpu_ratio = a.cpu / a.n;
    row.survivor = id != baseline_id && row.improvement > 0.0;
    all.push_back(row);
  }

  std::vector<RatingRow*> surv;
  for (auto& r : all)
    if (r.survivor) surv.push_back(&r);
  std::vector<double> imp, mem, cpu;
  for (const auto* r : surv) {
    imp.push_back(r->improvement);
    mem.push_back(r->mem_ratio);
    cpu.push_back(r->cpu_ratio);
  }
  const auto n_obj = min_max(imp, false), n_mem = min_max(mem, true), n_cpu = min_max(cpu, true);
  for (std::size_t i = 0; i < surv.size(); ++i) {
    surv[i]->norm_obj = n_obj[i];
    surv[i]->norm_mem = n_mem[i];
    surv[i]->norm_cpu = n_cpu[i];
    surv[i]->aggregate = w.objective * n_obj[i] + w.memory * n_mem[i] + w.cpu * n_cpu[i];
  }
  std::sort(surv.begin(), surv.end(), [](const RatingRow* a, const RatingRow* b) {
    if (a->aggregate != b->aggregate) return a->aggregate > b->aggregate;
    if (a->cpu_ratio != b->cpu_ratio) return a->cpu_ratio < b->cpu_ratio;
    if (a->mem_ratio != b->mem_ratio) return a->mem_ratio < b->mem_ratio;
    return a->pipeline < b->pipeline;
  });
  for (std::size_t i = 0; i < surv.size(); ++i) surv[i]->rank = static_cast<int>(i) + 1;

  RatingResult res;
  for (const auto* r : surv) {
    res.table.rows.push_back(*r);
    res.table.survivors.push_back(r->pipeline);
  }
  for (const auto& r : all)
    if (!r.survivor) {
      res.table.rows.push_back(r);
      res.table.eliminated.push_back(r.pipeline);
    }
  if (!surv.empty()) res.p_best = surv.front()->pipeline;

  // Resource characteristics of non-survivors come from a min-max over every
  // rated pipeline; their performance is 0.
  std::vector<double> mem_all, cpu_all;
  for (const auto& r : all) {
    mem_all.push_back(r.mem_ratio);
    cpu_all.push_back(r.cpu_ratio);
  }
  const auto m_all = min_max(mem_all, true), c_all = min_max(cpu_all, true);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& r = all[i];
    KbUpdate u;
    u.algorithm = terminal_of(r.pipeline);
    if (r.survivor) {
      u.performance = r.norm_obj;
      u.effort = 1.0 - r.norm_cpu;
      u.ram = 1.0 - r.norm_mem;
    } else {
      u.performance = 0.0;
      u.effort = 1.0 - c_all[i];
      u.ram = 1.0 - m_all[i];
    }
    res.kb_updates.push_back(u);
  }
  return res;
}

double aggregate_goal_value(std::span<const double> normalized, std::span<const double> weights) {
  validate_weights(weights);
  if (normalized.size() != weights.size()) throw ConstraintViolation("one weight per signal is required");
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * normalized[i];
  return s;
}

double normalize_signal(double value, std::span<const double> history) {
  if (history.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(history.begin(), history.end());
  if (*hi - *lo <= 0.0) return 0.0;
  return (value - *lo) / (*hi - *lo);
}

void write_rating_csv(std::ostream& os, const RatingTable& t) {
  os << "pipeline,improvement,mem_ratio,cpu_ratio,norm_obj,norm_mem,norm_cpu,aggregate,rank,status\n";
  for (const auto& r : t.rows) {
    os << r.pipeline << ',' << format_double(r.improvement) << ',' << format_double(r.mem_ratio) << ','
       << format_double(r.cpu_ratio) << ',' << format_double(r.norm_obj) << ',' << format_double(r.norm_mem) << ','
       << format_double(r.norm_cpu) << ',' << format_double(r.aggregate) << ','
       << (r.rank ? std::to_string(*r.rank) : std::string()) << ',' << (r.survivor ? "survivor" : "eliminated")
       << '\n';
  }
}

}  // namespace caai
