#include "hypball/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <utility>

#include "hypball/autodiff.hpp"
#include "hypball/geometry.hpp"
#include "hypball/geometry_ad.hpp"
#include "hypball/layers.hpp"
#include "hypball/losses.hpp"
#include "hypball/multimodal.hpp"
#include "hypball/rng.hpp"

namespace hypball::gc {

namespace {

using vm::Vec;

constexpr double kH = 1e-5;
constexpr int kDim = 4;

// The scalar function under test, rebuilt from a flat input vector; the
// returned leaves (in input order) are the variables being differentiated.
struct Built {
  ad::Var out;
  std::vector<ad::Var> leaves;
};
using BuildFn = std::function<Built(ad::Tape&, const Vec&)>;

ad::Var leaf_slice(ad::Tape& t, const Vec& x, std::size_t off, std::size_t len,
                   std::vector<ad::Var>& leaves) {
  Vec part(x.begin() + off, x.begin() + off + len);
  ad::Var v = t.leaf(part);
  leaves.push_back(v);
  return v;
}

double rel_error(const Vec& g_ad, const Vec& g_fd) {
  double num = 0.0, den = 1.0;
  for (std::size_t i = 0; i < g_fd.size(); ++i) {
    num = std::max(num, std::fabs(g_ad[i] - g_fd[i]));
    den = std::max(den, std::fabs(g_fd[i]));
  }
  return num / den;
}

double check_point(const BuildFn& build, const Vec& x) {
  ad::Tape t;
  Built res = build(t, x);
  t.backward(res.out);
  Vec g_ad;
  for (ad::Var leaf : res.leaves) {
    auto g = t.grad(leaf);
    g_ad.insert(g_ad.end(), g.begin(), g.end());
  }
  Vec g_fd = ad::finite_diff_grad(
      [&build](const Vec& v) {
        ad::Tape tt;
        return tt.value_scalar(build(tt, v).out);
      },
      x, kH);
  return rel_error(g_ad, g_fd);
}

// One op: `gen` draws a fresh in-domain input and the function built around
// it (probes and labels vary per point, so they live in the closure).
using PointGen = std::function<std::pair<Vec, BuildFn>(Rng&)>;

OpReport check_op(const std::string& name, int points, Rng& rng, const PointGen& gen) {
  OpReport r{name, 0.0, points};
  for (int i = 0; i < points; ++i) {
    auto [x, build] = gen(rng);
    r.worst_rel = std::max(r.worst_rel, check_point(build, x));
  }
  return r;
}

Vec ball_vec(Rng& rng, int dim, const geom::Curvature& k, double max_frac) {
  Vec v = rng.normal_vec(static_cast<std::size_t>(dim));
  const double target = rng.uniform(0.1, max_frac) * k.effective_radius();
  return vm::scaled(v, target / std::max(vm::norm(v), 1e-12));
}

Vec unit_scaled(Rng& rng, int dim, double lo, double hi) {
  Vec v = rng.normal_vec(static_cast<std::size_t>(dim));
  const double target = rng.uniform(lo, hi);
  return vm::scaled(v, target / std::max(vm::norm(v), 1e-12));
}

Vec concat_all(std::initializer_list<Vec> parts) {
  Vec out;
  for (const Vec& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// True when every relu preactivation in the stack is comfortably away from
// its kink, so central differences stay on one smooth piece.
bool relu_safe(const nn::Mlp& net, const Vec& x) {
  Vec cur = x;
  for (const auto& layer : net.layers) {
    Vec pre(static_cast<std::size_t>(layer.out));
    for (int i = 0; i < layer.out; ++i) {
      double s = layer.bias.value[static_cast<std::size_t>(i)];
      for (int j = 0; j < layer.in; ++j)
        s += layer.weight.value[static_cast<std::size_t>(i) * layer.in + j]
             * cur[static_cast<std::size_t>(j)];
      pre[static_cast<std::size_t>(i)] = s;
      if (layer.activation == nn::Activation::kRelu && std::fabs(s) < 1e-3) return false;
    }
    for (int i = 0; i < layer.out; ++i)
      cur[static_cast<std::size_t>(i)] =
          layer.activation == nn::Activation::kRelu ? std::max(pre[static_cast<std::size_t>(i)], 0.0) : pre[static_cast<std::size_t>(i)];
    cur.resize(static_cast<std::size_t>(layer.out));
  }
  return true;
}

Vec sample_relu_safe(Rng& rng, const nn::Mlp& net, int width) {
  for (int tries = 0; tries < 200; ++tries) {
    Vec x = rng.normal_vec(static_cast<std::size_t>(width));
    if (relu_safe(net, x)) return x;
  }
  throw DomainError("gradcheck: could not sample away from relu kinks");
}

}  // namespace

std::vector<OpReport> run_gradcheck_suite(std::uint64_t seed, int points) {
  if (points < 1) throw UsageError("gradcheck: points must be >= 1");
  Rng rng(seed);
  const geom::Curvature k(0.1);
  std::vector<OpReport> reports;

  reports.push_back(check_op("mobius_add", points, rng, [&k](Rng& r) {
    Vec x = concat_all({ball_vec(r, kDim, k, 0.5), ball_vec(r, kDim, k, 0.5)});
    Vec probe = r.normal_vec(kDim);
    BuildFn build = [probe, &k](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var a = leaf_slice(t, v, 0, kDim, res.leaves);
      ad::Var b = leaf_slice(t, v, kDim, kDim, res.leaves);
      res.out = t.dot(ad::mobius_add(t, a, b, k), t.leaf(probe));
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("exp_map", points, rng, [&k](Rng& r) {
    Vec x = concat_all({ball_vec(r, kDim, k, 0.5), unit_scaled(r, kDim, 0.1, 1.0)});
    Vec probe = r.normal_vec(kDim);
    BuildFn build = [probe, &k](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var p = leaf_slice(t, v, 0, kDim, res.leaves);
      ad::Var tv = leaf_slice(t, v, kDim, kDim, res.leaves);
      res.out = t.dot(ad::exp_map(t, p, tv, k), t.leaf(probe));
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("exp_map_origin", points, rng, [&k](Rng& r) {
    Vec x = unit_scaled(r, kDim, 0.1, 2.0);
    Vec probe = r.normal_vec(kDim);
    BuildFn build = [probe, &k](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var tv = leaf_slice(t, v, 0, kDim, res.leaves);
      res.out = t.dot(ad::exp_map_origin(t, tv, k), t.leaf(probe));
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("hyp_distance", points, rng, [&k](Rng& r) {
    Vec x = concat_all({ball_vec(r, kDim, k, 0.5), ball_vec(r, kDim, k, 0.5)});
    BuildFn build = [&k](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var a = leaf_slice(t, v, 0, kDim, res.leaves);
      ad::Var b = leaf_slice(t, v, kDim, kDim, res.leaves);
      res.out = ad::hyp_distance(t, a, b, k);
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("conformal_factor", points, rng, [&k](Rng& r) {
    Vec x = ball_vec(r, kDim, k, 0.8);
    BuildFn build = [&k](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var p = leaf_slice(t, v, 0, kDim, res.leaves);
      res.out = ad::conformal_factor(t, p, k);
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("clip_rescale", points, rng, [&k](Rng& r) {
    // Norms 1.2x-1.9x the cap: squarely on the active (rescaling) branch.
    const double bound = k.ball_radius() * (1.0 - 0.1);
    Vec x = unit_scaled(r, kDim, 1.2 * bound, 1.9 * bound);
    Vec probe = r.normal_vec(kDim);
    BuildFn build = [probe, &k](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var p = leaf_slice(t, v, 0, kDim, res.leaves);
      res.out = t.dot(ad::clip_to_ball(t, p, 0.1, k), t.leaf(probe));
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("hyp_blr_scores", points, rng, [&k](Rng& r) {
    Vec x = concat_all({ball_vec(r, kDim, k, 0.5), unit_scaled(r, kDim, 0.1, 1.0),
                        unit_scaled(r, kDim, 0.1, 1.0), unit_scaled(r, kDim, 0.5, 1.5),
                        unit_scaled(r, kDim, 0.5, 1.5)});
    const double w0 = r.normal(), w1 = r.normal();
    BuildFn build = [w0, w1, &k](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var pt = leaf_slice(t, v, 0, kDim, res.leaves);
      nn::HypBLRHead head;
      head.curvature = k;
      head.dim = kDim;
      head.p_pre[0] = nn::Param{"p0", Vec(v.begin() + kDim, v.begin() + 2 * kDim)};
      head.p_pre[1] = nn::Param{"p1", Vec(v.begin() + 2 * kDim, v.begin() + 3 * kDim)};
      head.a[0] = nn::Param{"a0", Vec(v.begin() + 3 * kDim, v.begin() + 4 * kDim)};
      head.a[1] = nn::Param{"a1", Vec(v.begin() + 4 * kDim, v.begin() + 5 * kDim)};
      nn::ParamBinding b(t);
      auto [s0, s1] = head.scores(t, b, pt);
      for (const nn::Param* p : {&head.p_pre[0], &head.p_pre[1], &head.a[0], &head.a[1]})
        res.leaves.push_back(b.var_of(*p));
      res.out = t.add(t.scale_const(s0, w0), t.scale_const(s1, w1));
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("softmax_probs", points, rng, [](Rng& r) {
    Vec x = {r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0)};
    BuildFn build = [](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var s0 = leaf_slice(t, v, 0, 1, res.leaves);
      ad::Var s1 = leaf_slice(t, v, 1, 1, res.leaves);
      res.out = nn::hyp_blr_probs(t, {s0, s1}).second;
      return res;
    };
    return std::make_pair(x, build);
  }));

  int bce_counter = 0;
  reports.push_back(check_op("binary_cross_entropy", points, rng, [&bce_counter](Rng& r) {
    Vec x = {r.uniform(0.1, 0.9)};
    const int label = bce_counter++ % 2;
    BuildFn build = [label](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var p = leaf_slice(t, v, 0, 1, res.leaves);
      res.out = loss::hyp_bce(t, p, label);
      return res;
    };
    return std::make_pair(x, build);
  }));

  const struct {
    const char* name;
    loss::ContrastiveMode mode;
  } contrastive_cases[] = {{"contrastive_bonafide", loss::ContrastiveMode::kBF},
                           {"contrastive_attack", loss::ContrastiveMode::kAtt},
                           {"contrastive_both", loss::ContrastiveMode::kBA}};
  for (const auto& cc : contrastive_cases) {
    const loss::ContrastiveMode mode = cc.mode;
    reports.push_back(check_op(cc.name, points, rng, [mode, &k](Rng& r) {
      Vec x = concat_all({ball_vec(r, kDim, k, 0.4), ball_vec(r, kDim, k, 0.4),
                          ball_vec(r, kDim, k, 0.4), ball_vec(r, kDim, k, 0.4)});
      BuildFn build = [mode, &k](ad::Tape& t, const Vec& v) {
        Built res;
        std::vector<ad::Var> bona = {leaf_slice(t, v, 0, kDim, res.leaves),
                                     leaf_slice(t, v, kDim, kDim, res.leaves)};
        std::vector<ad::Var> att = {leaf_slice(t, v, 2 * kDim, kDim, res.leaves),
                                    leaf_slice(t, v, 3 * kDim, kDim, res.leaves)};
        res.out = loss::contrastive_loss(t, bona, att, mode, 1.0, k);
        return res;
      };
      return std::make_pair(x, build);
    }));
  }

  reports.push_back(check_op("shared_distance", points, rng, [](Rng& r) {
    const int dim = 3;
    Vec x = r.normal_vec(3 * 2 * dim);
    BuildFn build = [dim](ad::Tape& t, const Vec& v) {
      Built res;
      std::vector<ad::Var> sha, f1, f2;
      for (int s = 0; s < 2; ++s) sha.push_back(leaf_slice(t, v, s * dim, dim, res.leaves));
      for (int s = 0; s < 2; ++s)
        f1.push_back(leaf_slice(t, v, 2 * dim + s * dim, dim, res.leaves));
      for (int s = 0; s < 2; ++s)
        f2.push_back(leaf_slice(t, v, 4 * dim + s * dim, dim, res.leaves));
      res.out = loss::distance_loss(t, sha, f1, f2);
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("total_unimodal", points, rng, [](Rng& r) {
    Vec x = {r.uniform(0.0, 2.0), r.uniform(0.0, 2.0)};
    BuildFn build = [](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var bce = leaf_slice(t, v, 0, 1, res.leaves);
      ad::Var bf = leaf_slice(t, v, 1, 1, res.leaves);
      res.out = loss::unimodal_total_loss(t, bce, bf, loss::LossWeights{});
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("total_multimodal", points, rng, [](Rng& r) {
    Vec x = r.normal_vec(5);
    BuildFn build = [](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var a = leaf_slice(t, v, 0, 1, res.leaves);
      ad::Var b = leaf_slice(t, v, 1, 1, res.leaves);
      ad::Var c = leaf_slice(t, v, 2, 1, res.leaves);
      ad::Var d = leaf_slice(t, v, 3, 1, res.leaves);
      ad::Var e = leaf_slice(t, v, 4, 1, res.leaves);
      res.out = loss::multimodal_total_loss(t, a, b, c, d, e, loss::LossWeights{});
      return res;
    };
    return std::make_pair(x, build);
  }));

  // Fixed seeded refiner stacks; inputs resampled away from relu kinks.
  Rng param_rng(seed ^ 0xabcdef12345ull);
  nn::Mlp refiner = nn::make_refiner("r", kDim, kDim, param_rng);
  reports.push_back(check_op("refine_forward", points, rng, [&refiner](Rng& r) {
    Vec x = sample_relu_safe(r, refiner, kDim);
    Vec probe = r.normal_vec(kDim);
    BuildFn build = [probe, &refiner](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var in = leaf_slice(t, v, 0, kDim, res.leaves);
      nn::ParamBinding b(t);
      res.out = t.dot(refiner.forward(t, b, in), t.leaf(probe));
      return res;
    };
    return std::make_pair(x, build);
  }));

  nn::Mlp s_sha = nn::make_refiner("s_sha", 2 * kDim, kDim, param_rng);
  reports.push_back(check_op("extract_shared", points, rng, [&s_sha](Rng& r) {
    Vec x = sample_relu_safe(r, s_sha, 2 * kDim);
    Vec probe = r.normal_vec(kDim);
    BuildFn build = [probe, &s_sha](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var f1 = leaf_slice(t, v, 0, kDim, res.leaves);
      ad::Var f2 = leaf_slice(t, v, kDim, kDim, res.leaves);
      nn::ParamBinding b(t);
      res.out = t.dot(mm::extract_shared(t, b, f1, f2, s_sha), t.leaf(probe));
      return res;
    };
    return std::make_pair(x, build);
  }));

  nn::Mlp s_spe1 = nn::make_refiner("s_spe1", kDim, kDim, param_rng);
  nn::Mlp s_spe2 = nn::make_refiner("s_spe2", kDim, kDim, param_rng);
  reports.push_back(check_op("decompose", points, rng, [&s_spe1, &s_spe2](Rng& r) {
    Vec f1, f2, fsha;
    for (int tries = 0;; ++tries) {
      f1 = r.normal_vec(kDim);
      f2 = r.normal_vec(kDim);
      fsha = r.normal_vec(kDim);
      if (relu_safe(s_spe1, vm::sub(f1, fsha)) && relu_safe(s_spe2, vm::sub(f2, fsha))) break;
      if (tries > 200) throw DomainError("gradcheck: could not sample away from relu kinks");
    }
    Vec x = concat_all({f1, f2, fsha});
    Vec probe1 = r.normal_vec(kDim), probe2 = r.normal_vec(kDim);
    BuildFn build = [probe1, probe2, &s_spe1, &s_spe2](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var vf1 = leaf_slice(t, v, 0, kDim, res.leaves);
      ad::Var vf2 = leaf_slice(t, v, kDim, kDim, res.leaves);
      ad::Var vsha = leaf_slice(t, v, 2 * kDim, kDim, res.leaves);
      nn::ParamBinding b(t);
      ad::Var spe1 = s_spe1.forward(t, b, t.sub(vf1, vsha));
      ad::Var spe2 = s_spe2.forward(t, b, t.sub(vf2, vsha));
      res.out = t.add(t.dot(spe1, t.leaf(probe1)), t.dot(spe2, t.leaf(probe2)));
      return res;
    };
    return std::make_pair(x, build);
  }));

  reports.push_back(check_op("hyperbolic_fuse", points, rng, [&k](Rng& r) {
    Vec x = concat_all({unit_scaled(r, kDim, 0.2, 1.5), unit_scaled(r, kDim, 0.2, 1.5),
                        unit_scaled(r, kDim, 0.2, 1.5)});
    Vec probe = r.normal_vec(kDim);
    BuildFn build = [probe, &k](ad::Tape& t, const Vec& v) {
      Built res;
      ad::Var sha = leaf_slice(t, v, 0, kDim, res.leaves);
      ad::Var spe1 = leaf_slice(t, v, kDim, kDim, res.leaves);
      ad::Var spe2 = leaf_slice(t, v, 2 * kDim, kDim, res.leaves);
      res.out = t.dot(mm::hyperbolic_fuse(t, sha, spe1, spe2, k, 0.1), t.leaf(probe));
      return res;
    };
    return std::make_pair(x, build);
  }));

  return reports;
}

double worst_relative_error(const std::vector<OpReport>& reports) {
  double worst = 0.0;
  for (const auto& r : reports) worst = std::max(worst, r.worst_rel);
  return worst;
}

}  // namespace hypball::gc
