#pragma once

#include <string>
#include <tuple>

#include "hypball/vecmath.hpp"

namespace hypball::metrics {

using vm::Vec;

// Scores with the convention "higher = more bonafide". A sample is accepted
// as bonafide when its score is >= the threshold.
struct ScoreSet {
  Vec bonafide;
  Vec attacks;
};

// Probability that a random bonafide outscores a random attack; ties count
// half (midrank formulation).
double roc_auc(const ScoreSet& s);

// Smallest achievable (apcer + bpcer)/2 over the candidate thresholds
// (midpoints of sorted unique scores plus one sentinel on each side). The
// rates are step functions, so the candidates cover every achievable
// operating point; the minimum average is the equal-error operating point.
double eer(const ScoreSet& s);

// Largest threshold t such that the fraction of scores < t is at most
// target; returned from the sorted scores themselves (empirical quantile
// from below, ties resolved by sorted order).
double threshold_at_bpcer(const Vec& dev_bonafide, double target_bpcer);

struct ErrorRates {
  double apcer = 0.0;  // attacks accepted: score >= threshold
  double bpcer = 0.0;  // bonafide rejected: score < threshold
  double acer = 0.0;   // (apcer + bpcer) / 2
};

ErrorRates acer(const ScoreSet& s, double threshold);

// ACER at the fixed threshold 0.5; scores must be probabilities in [0, 1].
double hter_fixed(const ScoreSet& s);

struct MetricsReport {
  std::string protocol;
  double threshold = 0.5;
  double apcer = 0.0;
  double bpcer = 0.0;
  double acer = 0.0;
  double eer = 0.0;
  double auc = 0.0;
  double hter = 0.0;
};

// All metrics at once; threshold is typically threshold_at_bpcer on the dev
// bonafide scores.
MetricsReport evaluate_scores(const ScoreSet& test, double threshold,
                              const std::string& protocol);

std::string report_json(const MetricsReport& r);
std::string report_table(const MetricsReport& r);

}  // namespace hypball::metrics
