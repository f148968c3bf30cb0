#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <unordered_set>

#include "graphrfi/dataset.hpp"
#include "graphrfi/rng.hpp"
#include "test_util.hpp"

using namespace graphrfi;
using testutil::event;
using testutil::user;

namespace {

Dataset two_class_dataset(int n_genuine, int n_fraud, int events_per_user) {
  Dataset ds;
  int item = 0;
  for (int i = 0; i < n_genuine + n_fraud; ++i) {
    const bool fraud = i >= n_genuine;
    const std::string uid = (fraud ? "f" : "g") + std::to_string(i);
    ds.users.push_back(user(uid, fraud ? UserLabel::fraudster : UserLabel::genuine));
    for (int k = 0; k < events_per_user; ++k) {
      ds.events.push_back(event(uid, "i" + std::to_string(item++ % 37), 1 + (item % 5)));
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("parse: one user and no events") {
  std::istringstream in(R"({"kind":"user","user_id":"u1","username_length":5,"label":"genuine"})"
                        "\n");
  const Dataset ds = parse_dataset_stream(in, "mem");
  REQUIRE(ds.users.size() == 1);
  REQUIRE(ds.events.empty());
  REQUIRE(ds.users[0].user_id == "u1");
  REQUIRE(ds.users[0].label == UserLabel::genuine);
}

TEST_CASE("parse: rating out of range names the line and field") {
  std::istringstream in(
      R"({"kind":"user","user_id":"u1","username_length":5,"label":"genuine"})"
      "\n"
      R"({"kind":"rating","user_id":"u1","item_id":"i1","rating":6,"timestamp":0,"helpful_votes":0,"unhelpful_votes":0,"review_sentiment":0,"feedback_length":0})"
      "\n");
  try {
    parse_dataset_stream(in, "mem");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    REQUIRE(what.find("mem:2") != std::string::npos);
    REQUIRE(what.find("rating") != std::string::npos);
  }
}

TEST_CASE("parse: malformed JSON, duplicates, unknown user") {
  std::istringstream bad_json("not json\n");
  REQUIRE_THROWS_AS(parse_dataset_stream(bad_json, "mem"), ValidationError);

  std::istringstream dup_edge(
      R"({"kind":"user","user_id":"u1","username_length":5,"label":"genuine"})"
      "\n"
      R"({"kind":"rating","user_id":"u1","item_id":"i1","rating":3,"timestamp":0,"helpful_votes":0,"unhelpful_votes":0,"review_sentiment":0,"feedback_length":0})"
      "\n"
      R"({"kind":"rating","user_id":"u1","item_id":"i1","rating":4,"timestamp":0,"helpful_votes":0,"unhelpful_votes":0,"review_sentiment":0,"feedback_length":0})"
      "\n");
  REQUIRE_THROWS_AS(parse_dataset_stream(dup_edge, "mem"), ValidationError);

  std::istringstream unknown(
      R"({"kind":"rating","user_id":"ghost","item_id":"i1","rating":3,"timestamp":0,"helpful_votes":0,"unhelpful_votes":0,"review_sentiment":0,"feedback_length":0})"
      "\n");
  REQUIRE_THROWS_AS(parse_dataset_stream(unknown, "mem"), ValidationError);

  std::istringstream bad_kind(R"({"kind":"widget"})"
                              "\n");
  REQUIRE_THROWS_AS(parse_dataset_stream(bad_kind, "mem"), ValidationError);
}

TEST_CASE("round-trip: write then parse returns an identical dataset") {
  Dataset ds = two_class_dataset(5, 2, 4);
  ds.users.push_back(user("anon", UserLabel::unlabeled, 3));
  ds.events.push_back(event("anon", "i99", 5, 1234567890, 7, 2, -1, 42));
  std::ostringstream out;
  write_dataset(ds, out);
  std::istringstream in(out.str());
  const Dataset parsed = parse_dataset_stream(in, "mem");
  REQUIRE(parsed == ds);
}

TEST_CASE("split_ratings: fraction arithmetic and genuine-only test set") {
  Dataset ds;
  ds.users.push_back(user("g1"));
  for (int i = 0; i < 100; ++i) ds.events.push_back(event("g1", "i" + std::to_string(i), 3));
  const auto split = split_ratings(ds, SplitSpec{11, 0.2, 0.8});
  REQUIRE(split.test.size() == 20);
  REQUIRE(split.train.size() == 80);
}

TEST_CASE("split_ratings: fraudster events always train") {
  Dataset ds;
  ds.users.push_back(user("g1"));
  ds.users.push_back(user("bad", UserLabel::fraudster));
  for (int i = 0; i < 40; ++i) ds.events.push_back(event("g1", "i" + std::to_string(i), 4));
  for (int i = 0; i < 50; ++i) ds.events.push_back(event("bad", "i" + std::to_string(i), 5));
  const auto split = split_ratings(ds, SplitSpec{3, 0.2, 0.8});
  REQUIRE(split.test.size() == 8);  // round(0.2 * 40)
  for (const auto& e : split.test) REQUIRE(e.user_id == "g1");
  std::size_t fraud_in_train = 0;
  for (const auto& e : split.train) fraud_in_train += e.user_id == "bad";
  REQUIRE(fraud_in_train == 50);
}

TEST_CASE("split_ratings: deterministic and a partition of genuine events") {
  const Dataset ds = two_class_dataset(8, 3, 6);
  const SplitSpec spec{77, 0.25, 0.8};
  const auto a = split_ratings(ds, spec);
  const auto b = split_ratings(ds, spec);
  REQUIRE(a.train == b.train);
  REQUIRE(a.test == b.test);
  REQUIRE(a.train.size() + a.test.size() == ds.events.size());

  std::unordered_set<std::string> keys;
  for (const auto& e : ds.events) keys.insert(e.user_id + "|" + e.item_id);
  for (const auto& e : a.train) REQUIRE(keys.erase(e.user_id + "|" + e.item_id) == 1);
  for (const auto& e : a.test) REQUIRE(keys.erase(e.user_id + "|" + e.item_id) == 1);
  REQUIRE(keys.empty());
}

TEST_CASE("split_ratings: no genuine users is an error") {
  Dataset ds;
  ds.users.push_back(user("bad", UserLabel::fraudster));
  ds.events.push_back(event("bad", "i1", 5));
  REQUIRE_THROWS_AS(split_ratings(ds, SplitSpec{}), ValidationError);
}

TEST_CASE("split_users: stratified 10+10 at 0.8") {
  const Dataset ds = two_class_dataset(10, 10, 1);
  const auto split = split_users(ds, SplitSpec{5, 0.2, 0.8});
  REQUIRE(split.train.size() == 16);
  REQUIRE(split.test.size() == 4);
  int train_fraud = 0, test_fraud = 0;
  for (const auto& u : split.train) train_fraud += u.label == UserLabel::fraudster;
  for (const auto& u : split.test) test_fraud += u.label == UserLabel::fraudster;
  REQUIRE(train_fraud == 8);
  REQUIRE(test_fraud == 2);
}

TEST_CASE("split_users: unlabeled users are excluded; all-unlabeled errors") {
  Dataset ds = two_class_dataset(4, 4, 1);
  ds.users.push_back(user("anon", UserLabel::unlabeled));
  const auto split = split_users(ds, SplitSpec{1, 0.2, 0.8});
  for (const auto& u : split.train) REQUIRE(u.label != UserLabel::unlabeled);
  for (const auto& u : split.test) REQUIRE(u.label != UserLabel::unlabeled);

  Dataset none;
  none.users.push_back(user("anon", UserLabel::unlabeled));
  REQUIRE_THROWS_AS(split_users(none, SplitSpec{}), ValidationError);
}

TEST_CASE("split_users: same seed gives an identical partition") {
  const Dataset ds = two_class_dataset(9, 7, 1);
  const auto a = split_users(ds, SplitSpec{123, 0.2, 0.8});
  const auto b = split_users(ds, SplitSpec{123, 0.2, 0.8});
  REQUIRE(a.train == b.train);
  REQUIRE(a.test == b.test);
}

TEST_CASE("inject_fraudsters: identity at 0, everything at 1") {
  const Dataset ds = two_class_dataset(4, 5, 3);
  const auto base = without_fraudster_events(ds.events, ds);
  REQUIRE(base.size() == 12);

  const auto none = inject_fraudsters(base, ds, 0.0, 9);
  REQUIRE(none == base);

  const auto all = inject_fraudsters(base, ds, 1.0, 9);
  REQUIRE(all.size() == base.size() + 15);  // 5 fraudsters x 3 events
}

TEST_CASE("inject_fraudsters: prefix of the seeded permutation") {
  const Dataset ds = two_class_dataset(2, 10, 2);
  const auto base = without_fraudster_events(ds.events, ds);
  const auto injected = inject_fraudsters(base, ds, 0.4, 31);

  // independent recomputation of the documented sampling scheme
  std::vector<std::string> ids;
  for (const auto& u : ds.users)
    if (u.label == UserLabel::fraudster) ids.push_back(u.user_id);
  std::sort(ids.begin(), ids.end());
  auto rng = Rng::derive(31, "inject-fraudsters");
  rng.shuffle(ids);
  std::unordered_set<std::string> expected(ids.begin(), ids.begin() + 4);

  std::unordered_set<std::string> added;
  for (std::size_t i = base.size(); i < injected.size(); ++i) added.insert(injected[i].user_id);
  REQUIRE(injected.size() == base.size() + 8);
  REQUIRE(added == expected);
}

TEST_CASE("inject_fraudsters: monotone nesting across fractions") {
  const Dataset ds = two_class_dataset(3, 13, 2);
  const auto base = without_fraudster_events(ds.events, ds);
  std::unordered_set<std::string> previous;
  for (double f : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
    const auto injected = inject_fraudsters(base, ds, f, 1234);
    std::unordered_set<std::string> now;
    for (std::size_t i = base.size(); i < injected.size(); ++i) now.insert(injected[i].user_id);
    for (const auto& id : previous) REQUIRE(now.count(id) == 1);
    previous = now;
  }
}
