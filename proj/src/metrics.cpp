#include "hypball/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hypball/errors.hpp"

namespace hypball::metrics {

namespace {

void require_scores(const ScoreSet& s, const char* what) {
  if (s.bonafide.empty() || s.attacks.empty())
    throw UsageError(std::string(what) + ": both score lists must be non-empty");
  if (!vm::all_finite(s.bonafide) || !vm::all_finite(s.attacks))
    throw DomainError(std::string(what) + ": non-finite score");
}

double fraction_ge(const Vec& scores, double t) {
  std::size_t n = 0;
  for (double v : scores) n += v >= t ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

double fraction_lt(const Vec& scores, double t) {
  std::size_t n = 0;
  for (double v : scores) n += v < t ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

}  // namespace

double roc_auc(const ScoreSet& s) {
  require_scores(s, "roc_auc");
  std::vector<std::pair<double, int>> pool;  // (score, is_bonafide)
  pool.reserve(s.bonafide.size() + s.attacks.size());
  for (double v : s.bonafide) pool.emplace_back(v, 1);
  for (double v : s.attacks) pool.emplace_back(v, 0);
  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Midranks make tied pairs count exactly half a win.
  double bona_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < pool.size()) {
    std::size_t j = i;
    while (j < pool.size() && pool[j].first == pool[i].first) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (pool[k].second) bona_rank_sum += midrank;
    i = j;
  }
  const double nb = static_cast<double>(s.bonafide.size());
  const double na = static_cast<double>(s.attacks.size());
  return (bona_rank_sum - nb * (nb + 1.0) / 2.0) / (nb * na);
}

double eer(const ScoreSet& s) {
  require_scores(s, "eer");
  std::set<double> unique(s.bonafide.begin(), s.bonafide.end());
  unique.insert(s.attacks.begin(), s.attacks.end());
  std::vector<double> u(unique.begin(), unique.end());

  std::vector<double> candidates;
  candidates.push_back(u.front() - 1.0);
  for (std::size_t k = 0; k + 1 < u.size(); ++k) candidates.push_back((u[k] + u[k + 1]) / 2.0);
  candidates.push_back(u.back() + 1.0);

  double best = 1.0;
  for (double t : candidates) {
    const double rate = (fraction_ge(s.attacks, t) + fraction_lt(s.bonafide, t)) / 2.0;
    best = std::min(best, rate);
  }
  return best;
}

double threshold_at_bpcer(const Vec& dev_bonafide, double target_bpcer) {
  if (dev_bonafide.empty()) throw UsageError("threshold_at_bpcer: empty score list");
  if (!(target_bpcer >= 0.0) || !(target_bpcer < 1.0))
    throw UsageError("threshold_at_bpcer: target must be in [0, 1)");
  Vec sorted = dev_bonafide;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = sorted.size(); k > 0; --k) {
    // Scores strictly below sorted[k-1] are exactly the first occurrences
    // before it in sorted order.
    const std::size_t below =
        static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), sorted[k - 1]) -
                                 sorted.begin());
    if (static_cast<double>(below) / n <= target_bpcer) return sorted[k - 1];
  }
  return sorted.front();
}

ErrorRates acer(const ScoreSet& s, double threshold) {
  require_scores(s, "acer");
  ErrorRates r;
  r.apcer = fraction_ge(s.attacks, threshold);
  r.bpcer = fraction_lt(s.bonafide, threshold);
  r.acer = (r.apcer + r.bpcer) / 2.0;
  return r;
}

double hter_fixed(const ScoreSet& s) {
  require_scores(s, "hter_fixed");
  for (const Vec* v : {&s.bonafide, &s.attacks})
    for (double x : *v)
      if (x < 0.0 || x > 1.0) throw UsageError("hter_fixed: scores must be probabilities");
  return acer(s, 0.5).acer;
}

MetricsReport evaluate_scores(const ScoreSet& test, double threshold,
                              const std::string& protocol) {
  MetricsReport r;
  r.protocol = protocol;
  r.threshold = threshold;
  const ErrorRates e = acer(test, threshold);
  r.apcer = e.apcer;
  r.bpcer = e.bpcer;
  r.acer = e.acer;
  r.eer = eer(test);
  r.auc = roc_auc(test);
  r.hter = hter_fixed(test);
  return r;
}

std::string report_json(const MetricsReport& r) {
  nlohmann::json j;
  j["protocol"] = r.protocol;
  j["threshold"] = r.threshold;
  j["apcer"] = r.apcer;
  j["bpcer"] = r.bpcer;
  j["acer"] = r.acer;
  j["eer"] = r.eer;
  j["auc"] = r.auc;
  j["hter"] = r.hter;
  return j.dump(2);
}

std::string report_table(const MetricsReport& r) {
  std::ostringstream out;
  out << "protocol: " << r.protocol << "\n";
  out << "metric      value\n";
  auto row = [&out](const char* name, double v) {
    out << name;
    for (std::size_t pad = std::string(name).size(); pad < 12; ++pad) out << ' ';
    out << v << "\n";
  };
  row("threshold", r.threshold);
  row("apcer", r.apcer);
  row("bpcer", r.bpcer);
  row("acer", r.acer);
  row("eer", r.eer);
  row("auc", r.auc);
  row("hter", r.hter);
  return out.str();
}

}  // namespace hypball::metrics
