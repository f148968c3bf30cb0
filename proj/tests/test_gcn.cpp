#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "graphrfi/forward.hpp"
#include "graphrfi/gcn.hpp"
#include "graphrfi/gradcheck.hpp"
#include "graphrfi/synth.hpp"
#include "graphrfi/train.hpp"
#include "test_util.hpp"

using namespace graphrfi;
using testutil::event;
using testutil::user;

namespace {

ModelDims tiny_dims(int e, int h, int n_items) {
  ModelDims d;
  d.e = e;
  d.h = h;
  d.h_att = h;
  d.d_z = h;
  d.trees = 2;
  d.depth = 2;
  d.n_items = n_items;
  return d;
}

// 1-dim identity-ish message network: every layer weight 1, bias 0, so
// g(a + b) collapses to relu chains over a + b.
void set_identity_mlp(ParamStore& ps, int w0, int b0, int w1, int b1, int w2, int b2) {
  for (auto& x : ps.tensors[static_cast<std::size_t>(w0)].v) x = 1.0;
  (void)b0;
  ps.tensors[static_cast<std::size_t>(w1)].v = {1.0};
  ps.tensors[static_cast<std::size_t>(w2)].v = {1.0};
  (void)b1;
  (void)b2;
}

}  // namespace

TEST_CASE("message: zero network maps everything to zero") {
  const ModelDims d = tiny_dims(3, 4, 1);
  ParamStore ps = make_param_store(d);
  const GcnView view{&d, &ps};
  const Vec h = message(view, std::vector<double>{1.0, -2.0, 3.0}, 2);
  for (double x : h) REQUIRE(x == 0.0);
}

TEST_CASE("message: one-dimensional toy evaluates to 3") {
  const ModelDims d = tiny_dims(1, 1, 1);
  ParamStore ps = make_param_store(d);
  set_identity_mlp(ps, pid::kGW0, pid::kGb0, pid::kGW1, pid::kGb1, pid::kGW2, pid::kGb2);
  ps.tensors[pid::kEr].at(1, 0) = 2.0;  // rating 2 row
  const GcnView view{&d, &ps};
  const Vec h = message(view, std::vector<double>{1.0}, 2);
  REQUIRE(h.size() == 1);
  REQUIRE(h[0] == 3.0);
}

TEST_CASE("message: rating selects its embedding row only") {
  const ModelDims d = tiny_dims(2, 3, 1);
  ParamStore ps = make_param_store(d);
  init_params(ps, 0.1, 7);
  const GcnView view{&d, &ps};
  const std::vector<double> z{0.4, -0.1};
  const Vec before = message(view, z, 5);
  ps.tensors[pid::kEr].at(0, 0) += 10.0;  // rating-1 row
  ps.tensors[pid::kEr].at(0, 1) -= 3.0;
  const Vec after = message(view, z, 5);
  REQUIRE(before == after);
  const Vec self_before = message_self(view, z);
  ps.tensors[pid::kEr].at(kSelfEmbeddingRow, 0) += 1.0;
  REQUIRE(message_self(view, z) != self_before);
  REQUIRE_THROWS_AS(message(view, z, 0), ValidationError);
}

TEST_CASE("attention: single message, identical messages, softmax arithmetic") {
  const ModelDims d = tiny_dims(1, 1, 1);
  ParamStore ps = make_param_store(d);
  // score = ReLU(1 * message + 0 * z) * 1 + 0 = ReLU(message)
  ps.tensors[pid::kAttW1].v = {1.0, 0.0};
  ps.tensors[pid::kAttW2].v = {1.0};
  const GcnView view{&d, &ps};
  const std::vector<double> z{0.0};

  const Vec single = attention_weights(view, z, {Vec{0.7}});
  REQUIRE(single.size() == 1);
  REQUIRE(single[0] == 1.0);

  const Vec uniform = attention_weights(view, z, {Vec{0.5}, Vec{0.5}, Vec{0.5}, Vec{0.5}});
  for (double a : uniform) REQUIRE(a == Catch::Approx(0.25).margin(1e-12));

  // scores (ln 2, 0) -> alpha (2/3, 1/3)
  const Vec alpha = attention_weights(view, z, {Vec{std::log(2.0)}, Vec{0.0}});
  REQUIRE(alpha[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
  REQUIRE(alpha[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-12));

  REQUIRE_THROWS_AS(attention_weights(view, z, {}), ValidationError);
}

TEST_CASE("attention: weights sum to one and stay positive (1000 random cases)") {
  const ModelDims d = tiny_dims(3, 4, 1);
  ParamStore ps = make_param_store(d);
  auto rng = Rng::derive(13, "att-prop");
  const GcnView view{&d, &ps};
  for (int trial = 0; trial < 1000; ++trial) {
    init_params(ps, 0.5, 1000 + static_cast<std::uint64_t>(trial));
    const int k = 1 + static_cast<int>(rng.below(6));
    std::vector<Vec> msgs;
    for (int i = 0; i < k; ++i) {
      Vec m(4);
      for (auto& x : m) x = rng.normal(0.0, 2.0);
      msgs.push_back(std::move(m));
    }
    std::vector<double> z(3);
    for (auto& x : z) x = rng.normal(0.0, 2.0);
    const Vec alpha = attention_weights(view, z, msgs);
    double sum = 0.0;
    for (double a : alpha) {
      REQUIRE(a > 0.0);
      sum += a;
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("aggregate: zero weight matrix, identity configuration, convex toy") {
  const ModelDims d2 = tiny_dims(2, 2, 1);
  ParamStore ps = make_param_store(d2);
  ps.tensors[pid::kBagg].v = {0.3, -0.4};
  const GcnView view{&d2, &ps};
  const Vec z0 = aggregate(view, {Vec{5.0, 5.0}}, Vec{1.0});
  REQUIRE(z0[0] == 0.3);  // ReLU(b) with W = 0
  REQUIRE(z0[1] == 0.0);

  ps.tensors[pid::kWagg].v = {1.0, 0.0, 0.0, 1.0};
  ps.tensors[pid::kBagg].v = {0.0, 0.0};
  const Vec z1 = aggregate(view, {Vec{0.7, -0.2}}, Vec{1.0});
  REQUIRE(z1[0] == Catch::Approx(0.7).margin(1e-15));
  REQUIRE(z1[1] == 0.0);  // ReLU clips the negative lane

  const Vec z2 = aggregate(view, {Vec{1.0, 0.0}, Vec{0.0, 2.0}}, Vec{0.25, 0.75});
  REQUIRE(z2[0] == Catch::Approx(0.25).margin(1e-15));
  REQUIRE(z2[1] == Catch::Approx(1.5).margin(1e-15));

  REQUIRE_THROWS_AS(aggregate(view, {Vec{1.0, 0.0}}, Vec{0.5, 0.5}), ValidationError);
}

TEST_CASE("convolve_all: isolated user collapses to its self-message") {
  const ModelDims d = tiny_dims(2, 2, 1);
  ParamStore ps = make_param_store(d);
  init_params(ps, 0.3, 21);
  const GcnView view{&d, &ps};
  const RatingGraph g = build_graph({user("u1")}, {}, {"i1"});
  std::vector<FeatureVector> X(1);
  X[0].fill(0.0);
  X[0][0] = 1.0;

  const EmbeddingTables emb = convolve_all(view, g, X);
  const Vec z0 = user_initial_embedding(view, X[0]);
  const Vec h_self = message_self(view, z0);
  const Vec expect = aggregate(view, {h_self}, Vec{1.0});
  for (int i = 0; i < d.e; ++i) REQUIRE(emb.Z_U_new.at(0, i) == expect[static_cast<std::size_t>(i)]);
}

TEST_CASE("convolve_all: two-user one-item toy matches hand calculation") {
  const ModelDims d = tiny_dims(1, 1, 1);
  ParamStore ps = make_param_store(d);
  // z_u0 = x[0]; z_v0 = 0.8; message nets pass sums through; attention score
  // is ReLU of the message; one aggregation weight.
  ps.tensors[pid::kWx].at(0, 0) = 1.0;
  ps.tensors[pid::kZV0].v = {0.8};
  ps.tensors[pid::kEr].at(3, 0) = 0.3;                // rating 4
  ps.tensors[pid::kEr].at(kSelfEmbeddingRow, 0) = -0.2;
  set_identity_mlp(ps, pid::kGW0, pid::kGb0, pid::kGW1, pid::kGb1, pid::kGW2, pid::kGb2);
  ps.tensors[pid::kAttW1].v = {1.0, 0.0};
  ps.tensors[pid::kAttW2].v = {1.0};
  ps.tensors[pid::kWagg].v = {1.0};

  const GcnView view{&d, &ps};
  const RatingGraph g = build_graph({user("u1"), user("u2")}, {event("u1", "i1", 4)});
  std::vector<FeatureVector> X(2);
  X[0].fill(0.0);
  X[1].fill(0.0);
  X[0][0] = 0.5;    // u1
  X[1][0] = -0.25;  // u2

  const EmbeddingTables emb = convolve_all(view, g, X);

  // user u1: messages (item: 0.8 + 0.3 = 1.1, self: 0.5 - 0.2 = 0.3)
  {
    const double m_item = 1.1, m_self = 0.3;
    const double e1 = std::exp(m_item), e2 = std::exp(m_self);
    const double expect = (e1 * m_item + e2 * m_self) / (e1 + e2);
    REQUIRE(emb.Z_U_new.at(0, 0) == Catch::Approx(expect).epsilon(1e-12));
  }
  // user u2 isolated: self message relu(-0.25 - 0.2) = 0; score 0 -> alpha 1
  REQUIRE(emb.Z_U_new.at(1, 0) == 0.0);
  // item i1: messages (user u1: 0.5 + 0.3 = 0.8, self: 0.8 - 0.2 = 0.6)
  {
    const double m_user = 0.8, m_self = 0.6;
    const double e1 = std::exp(m_user), e2 = std::exp(m_self);
    const double expect = (e1 * m_user + e2 * m_self) / (e1 + e2);
    REQUIRE(emb.Z_V_new.at(0, 0) == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("convolve_all: neighbor order cannot change the result") {
  SynthConfig cfg;
  cfg.n_genuine = 12;
  cfg.n_fraudsters = 0;
  cfg.n_items = 8;
  cfg.ratings_per_user = 5;
  cfg.seed = 31;
  const Dataset ds = generate_synthetic(cfg);

  const ModelDims d = tiny_dims(4, 4, 8);
  ParamStore ps = make_param_store(d);
  init_params(ps, 0.2, 5);
  const GcnView view{&d, &ps};

  Pipeline p1 = make_pipeline(ds, ds.events, nullptr);
  auto shuffled = ds.events;
  auto rng = Rng::derive(2, "perm");
  rng.shuffle(shuffled);
  Dataset ds2 = ds;
  ds2.events = shuffled;
  Pipeline p2 = make_pipeline(ds2, ds2.events, nullptr);

  const EmbeddingTables a = convolve_all(view, p1.graph, p1.X_std);
  const EmbeddingTables b = convolve_all(view, p2.graph, p2.X_std);
  REQUIRE(a.Z_U_new.v == b.Z_U_new.v);  // adjacency is canonicalized, so bit-equal
  REQUIRE(a.Z_V_new.v == b.Z_V_new.v);

  // explicit message permutation through the attention path
  std::vector<Vec> msgs{{0.1, -0.2, 0.3, 0.4}, {1.0, 0.5, -0.5, 0.2}, {0.0, 0.7, 0.2, -0.1}};
  const Vec query{0.3, 0.1, -0.2, 0.0};
  const Vec alpha = attention_weights(view, query, msgs);
  Vec za = aggregate(view, msgs, alpha);
  std::vector<Vec> perm{msgs[2], msgs[0], msgs[1]};
  const Vec alpha_p = attention_weights(view, query, perm);
  Vec zb = aggregate(view, perm, alpha_p);
  for (std::size_t i = 0; i < za.size(); ++i)
    REQUIRE(za[i] == Catch::Approx(zb[i]).epsilon(1e-9).margin(1e-12));
}

TEST_CASE("convolve_all: threaded run matches single-threaded bit for bit") {
  SynthConfig cfg;
  cfg.n_genuine = 20;
  cfg.n_fraudsters = 0;
  cfg.n_items = 10;
  cfg.ratings_per_user = 6;
  cfg.seed = 8;
  const Dataset ds = generate_synthetic(cfg);
  Pipeline p = make_pipeline(ds, ds.events, nullptr);
  const ModelDims d = tiny_dims(4, 4, p.graph.n_items());
  ParamStore ps = make_param_store(d);
  init_params(ps, 0.2, 9);
  const GcnView view{&d, &ps};
  const EmbeddingTables a = convolve_all(view, p.graph, p.X_std, 1);
  const EmbeddingTables b = convolve_all(view, p.graph, p.X_std, 3);
  REQUIRE(a.Z_U_new.v == b.Z_U_new.v);
  REQUIRE(a.Z_V_new.v == b.Z_V_new.v);
}

TEST_CASE("predict_rating: zero projection, toy value, purity") {
  const ModelDims d = tiny_dims(1, 1, 1);
  ParamStore ps = make_param_store(d);
  const GcnView view{&d, &ps};
  REQUIRE(predict_rating(view, std::vector<double>{0.4}, std::vector<double>{0.9}) == 0.0);

  set_identity_mlp(ps, pid::kRW0, pid::kRb0, pid::kRW1, pid::kRb1, pid::kRW2, pid::kRb2);
  ps.tensors[pid::kWproj].v = {2.0};
  const double r1 = predict_rating(view, std::vector<double>{0.4}, std::vector<double>{0.9});
  REQUIRE(r1 == Catch::Approx(2.0 * (0.4 + 0.9)).epsilon(1e-15));
  const double r2 = predict_rating(view, std::vector<double>{0.4}, std::vector<double>{0.9});
  REQUIRE(r1 == r2);
  REQUIRE(clamp_rating(7.3) == 5.0);
  REQUIRE(clamp_rating(-2.0) == 1.0);
  REQUIRE(clamp_rating(3.3) == 3.3);
}

TEST_CASE("tape forward equals the plain forward path") {
  SynthConfig cfg;
  cfg.n_genuine = 10;
  cfg.n_fraudsters = 4;
  cfg.n_items = 8;
  cfg.ratings_per_user = 4;
  cfg.seed = 77;
  const Dataset ds = generate_synthetic(cfg);
  Pipeline p = make_pipeline(ds, ds.events, nullptr);
  const ModelDims d = tiny_dims(5, 6, p.graph.n_items());
  ParamStore ps = make_param_store(d);
  init_params(ps, 0.2, 3);
  const GcnView gv{&d, &ps};
  const ForestView fv{&d, &ps};

  const EmbeddingTables emb = convolve_all(gv, p.graph, p.X_std);
  TapeForward F(ps, d, p.graph, p.X_std);
  for (int u = 0; u < p.graph.n_users(); ++u) {
    const auto& z = F.bt.tape.val(F.user_embedding(u));
    for (int i = 0; i < d.e; ++i)
      REQUIRE(z[static_cast<std::size_t>(i)] ==
              Catch::Approx(emb.Z_U_new.at(u, i)).margin(1e-12));
  }
  for (int v = 0; v < p.graph.n_items(); ++v) {
    const auto& z = F.bt.tape.val(F.item_embedding(v));
    for (int i = 0; i < d.e; ++i)
      REQUIRE(z[static_cast<std::size_t>(i)] ==
              Catch::Approx(emb.Z_V_new.at(v, i)).margin(1e-12));
  }
  for (const auto& edge : p.train_edges) {
    const double plain = predict_rating(
        gv, std::span<const double>(emb.Z_U_new.row(edge.user), static_cast<std::size_t>(d.e)),
        std::span<const double>(emb.Z_V_new.row(edge.item), static_cast<std::size_t>(d.e)));
    REQUIRE(F.bt.tape.scalar(F.prediction(edge.user, edge.item)) ==
            Catch::Approx(plain).margin(1e-12));
  }
  // forest path with a constant error feature
  for (int u : {0, 3, 7}) {
    const double err = 0.37;
    std::vector<double> zprime(emb.Z_U_new.row(u), emb.Z_U_new.row(u) + d.e);
    zprime.push_back(err);
    const auto plain_dist = forest_prob(fv, dense_embed(fv, zprime));
    const auto node = F.forest_distribution(u, F.bt.tape.constant(err));
    REQUIRE(F.bt.tape.val(node)[0] == Catch::Approx(plain_dist[0]).margin(1e-12));
    REQUIRE(F.bt.tape.val(node)[1] == Catch::Approx(plain_dist[1]).margin(1e-12));
  }
}

TEST_CASE("gradient of a predicted rating matches finite differences everywhere") {
  const Dataset ds = grad_check_dataset(11);
  Pipeline p = make_pipeline(ds, ds.events, nullptr);
  const ModelDims d = tiny_dims(4, 4, p.graph.n_items());
  ParamStore ps = make_param_store(d);
  init_params(ps, 0.1, 11);

  const EdgeRef probe = p.train_edges[0];
  auto value = [&](const ParamStore& params) {
    TapeForward F(params, d, p.graph, p.X_std);
    return F.bt.tape.scalar(F.prediction(probe.user, probe.item));
  };
  Grads analytic(ps);
  {
    TapeForward F(ps, d, p.graph, p.X_std);
    const ad::NodeId r = F.prediction(probe.user, probe.item);
    F.bt.tape.backward(r);
    F.bt.collect(analytic);
  }
  ParamStore probe_ps = ps;
  const double step = 1e-4;
  for (std::size_t t = 0; t < ps.tensors.size(); ++t) {
    for (std::size_t j = 0; j < ps.tensors[t].v.size(); ++j) {
      const double saved = probe_ps.tensors[t].v[j];
      probe_ps.tensors[t].v[j] = saved + step;
      const double up = value(probe_ps);
      probe_ps.tensors[t].v[j] = saved - step;
      const double down = value(probe_ps);
      probe_ps.tensors[t].v[j] = saved;
      const double fd = (up - down) / (2.0 * step);
      INFO(ps.names[t] << "[" << j << "]");
      REQUIRE(relative_error(analytic.tensors[t].v[j], fd) <= 1e-4);
    }
  }
}
