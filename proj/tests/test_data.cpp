#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"

#include "aclr/data.hpp"
#include "testutil.hpp"

using aclr::Checkpoint;
using aclr::Dataset;
using aclr::Event;
using aclr::Post;
using aclr::Role;
using testutil::make_post;

namespace {

Event two_level_event() {
  Event e;
  e.id = "ev";
  e.label = 1;
  e.posts = {
      make_post("r", std::nullopt, 0.0, "claim text"),
      make_post("a", "r", 10.0, "first reply"),
      make_post("b", "r", 20.0, "second reply"),
      make_post("c", "a", 30.0, "nested reply"),
  };
  return e;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("dataset JSONL round trip is exact") {
  testutil::ScratchDir dir;
  aclr::Rng rng(3);
  Dataset ds;
  ds.name = "rt";
  ds.role = Role::target;
  for (int i = 0; i < 12; ++i) {
    ds.events.push_back(testutil::random_tree_event(
        "e" + std::to_string(i), i % 2, 1 + static_cast<int>(rng.below(9)),
        rng));
  }
  // Posts without text must survive too.
  ds.events[0].posts[0].text.reset();

  const std::string path = dir.file("events.jsonl");
  aclr::save_dataset(path, ds);
  const Dataset back = aclr::load_dataset(path, "rt", Role::target);
  CHECK(back == ds);
}

TEST_CASE("load sorts posts into canonical order") {
  testutil::ScratchDir dir;
  const std::string path = dir.file("events.jsonl");
  std::ofstream out(path);
  out << R"({"id":"e","label":0,"posts":[)"
      << R"({"id":"late","parent":"root","t":50},)"
      << R"({"id":"early","parent":"root","t":5},)"
      << R"({"id":"root","parent":null,"t":0}]})"
      << "\n";
  out.close();

  const Dataset ds = aclr::load_dataset(path, "x", Role::source);
  REQUIRE(ds.events.size() == 1);
  CHECK(ds.events[0].posts[0].id == "root");
  CHECK(ds.events[0].posts[1].id == "early");
  CHECK(ds.events[0].posts[2].id == "late");
  CHECK_FALSE(ds.events[0].posts[0].text.has_value());
}

TEST_CASE("event validation rejects structural violations") {
  Event ok = two_level_event();
  CHECK_NOTHROW(aclr::validate_event(ok));

  Event dup = ok;
  dup.posts[2].id = "a";
  CHECK_THROWS_AS(aclr::validate_event(dup), aclr::LoadError);

  Event orphan = ok;
  orphan.posts[3].parent = "nope";
  CHECK_THROWS_AS(aclr::validate_event(orphan), aclr::LoadError);

  Event two_roots = ok;
  two_roots.posts[1].parent.reset();
  CHECK_THROWS_AS(aclr::validate_event(two_roots), aclr::LoadError);

  Event root_delay = ok;
  root_delay.posts[0].delay_seconds = 1.0;
  CHECK_THROWS_AS(aclr::validate_event(root_delay), aclr::LoadError);

  Event neg = ok;
  neg.posts[1].delay_seconds = -2.0;
  CHECK_THROWS_AS(aclr::validate_event(neg), aclr::LoadError);

  Event label = ok;
  label.label = 7;
  CHECK_THROWS_AS(aclr::validate_event(label), aclr::LoadError);

  Event unsorted = ok;
  std::swap(unsorted.posts[1], unsorted.posts[3]);
  CHECK_THROWS_AS(aclr::validate_event(unsorted), aclr::LoadError);

  Event cycle = ok;
  // a <-> c reference each other; unreachable from the root.
  cycle.posts[1].parent = "c";
  CHECK_THROWS_AS(aclr::validate_event(cycle), aclr::LoadError);
}

TEST_CASE("duplicate event ids are rejected at load") {
  testutil::ScratchDir dir;
  const std::string path = dir.file("dups.jsonl");
  std::ofstream out(path);
  const char* line =
      R"({"id":"same","label":0,"posts":[{"id":"r","parent":null,"t":0}]})";
  out << line << "\n" << line << "\n";
  out.close();
  CHECK_THROWS_AS(aclr::load_dataset(path, "x", Role::source),
                  aclr::LoadError);
}

TEST_CASE("load errors carry file and line position") {
  testutil::ScratchDir dir;
  const std::string path = dir.file("bad.jsonl");
  std::ofstream out(path);
  out << "\n" << "{not json\n";
  out.close();
  try {
    aclr::load_dataset(path, "x", Role::source);
    FAIL("expected LoadError");
  } catch (const aclr::LoadError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("embedding table round trip and validation") {
  testutil::ScratchDir dir;
  aclr::EmbeddingTable table;
  table.dim = 3;
  aclr::Rng rng(9);
  for (int i = 0; i < 8; ++i) {
    aclr::Vector v(3);
    v << rng.normal(), rng.normal(), rng.normal();
    table.vectors["p" + std::to_string(i)] = v;
  }
  const std::string path = dir.file("emb.jsonl");
  aclr::save_embeddings(path, table);
  const aclr::EmbeddingTable back = aclr::load_embeddings(path);
  CHECK(back.dim == 3);
  REQUIRE(back.vectors.size() == table.vectors.size());
  for (const auto& [id, v] : table.vectors) {
    REQUIRE(back.vectors.count(id) == 1);
    CHECK((back.vectors.at(id) - v).cwiseAbs().maxCoeff() == 0.0);
  }

  const std::string bad = dir.file("bad.jsonl");
  std::ofstream out(bad);
  out << R"({"dim":3})" << "\n"
      << R"({"id":"p","vec":[1,2]})" << "\n";
  out.close();
  CHECK_THROWS_AS(aclr::load_embeddings(bad), aclr::LoadError);

  const std::string headerless = dir.file("noheader.jsonl");
  std::ofstream out2(headerless);
  out2 << R"({"id":"p","vec":[1,2,3]})" << "\n";
  out2.close();
  CHECK_THROWS_AS(aclr::load_embeddings(headerless), aclr::LoadError);
}

TEST_CASE("hashed embeddings ignore token order and normalize") {
  aclr::HashingEmbedder emb{16};
  const aclr::Vector a = aclr::embed_text("virus spreads fast city", emb);
  const aclr::Vector b = aclr::embed_text("city fast virus spreads", emb);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // order cannot matter at all
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.size() == 16);

  const aclr::Vector empty = aclr::embed_text("", emb);
  CHECK(empty.norm() == 0.0);

  CHECK_THROWS_AS(aclr::embed_text("x", aclr::HashingEmbedder{0}),
                  aclr::ConfigError);
}

TEST_CASE("embed_event lists every missing post") {
  Event e = two_level_event();
  aclr::EmbeddingTable table;
  table.dim = 4;
  table.vectors["r"] = aclr::Vector::Ones(4);
  table.vectors["b"] = aclr::Vector::Ones(4);
  try {
    aclr::embed_event(e, table);
    FAIL("expected EmbeddingError");
  } catch (const aclr::EmbeddingError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("a") != std::string::npos);
    CHECK(msg.find("c") != std::string::npos);
  }

  table.vectors["a"] = aclr::Vector::Zero(4);
  table.vectors["c"] = 2.0 * aclr::Vector::Ones(4);
  const aclr::Matrix x = aclr::embed_event(e, table);
  CHECK(x.rows() == 4);
  CHECK(x.cols() == 4);
  CHECK(x(3, 0) == 2.0);  // rows follow post order
}

TEST_CASE("build_table covers all posts and flags conflicting reuse") {
  Dataset ds;
  ds.name = "h";
  ds.events.push_back(two_level_event());
  ds.events[0].label = 0;
  const aclr::EmbeddingTable table =
      aclr::build_table(ds, aclr::HashingEmbedder{8});
  CHECK(table.vectors.size() == 4);

  Dataset clash = ds;
  Event other = two_level_event();
  other.id = "ev2";
  other.posts[1].text = "entirely different words";
  clash.events.push_back(other);  // same post ids, one with new text
  CHECK_THROWS_AS(aclr::build_table(clash, aclr::HashingEmbedder{8}),
                  aclr::EmbeddingError);
}

TEST_CASE("truncation respects counts, delays and ancestor closure") {
  Event e = two_level_event();

  Event first2 = aclr::truncate_event(e, {Checkpoint::Kind::post_count, 2.0});
  REQUIRE(first2.posts.size() == 2);
  CHECK(first2.posts[0].id == "r");
  CHECK(first2.posts[1].id == "a");
  CHECK_NOTHROW(aclr::validate_event(first2));

  Event by_time =
      aclr::truncate_event(e, {Checkpoint::Kind::elapsed_seconds, 20.0});
  REQUIRE(by_time.posts.size() == 3);  // r, a, b; c arrives at 30
  CHECK(by_time.posts[2].id == "b");

  // An early post whose parent is late must be dropped with its parent.
  Event gap;
  gap.id = "gap";
  gap.label = 0;
  gap.posts = {
      make_post("r", std::nullopt, 0.0, "x"),
      make_post("late", "r", 100.0, "x"),
      make_post("child", "late", 110.0, "x"),
  };
  Event cut = aclr::truncate_event(gap, {Checkpoint::Kind::post_count, 1.0});
  REQUIRE(cut.posts.size() == 1);
  CHECK(cut.posts[0].id == "r");

  Event all = aclr::truncate_event(
      e, {Checkpoint::Kind::post_count,
          std::numeric_limits<double>::infinity()});
  CHECK(all == e);

  Event claim_only =
      aclr::truncate_event(e, {Checkpoint::Kind::elapsed_seconds, 0.0});
  REQUIRE(claim_only.posts.size() == 1);
  CHECK(claim_only.posts[0].id == "r");

  CHECK_THROWS_AS(
      aclr::truncate_event(e, {Checkpoint::Kind::post_count, 0.0}),
      aclr::ContractError);
  CHECK_THROWS_AS(
      aclr::truncate_event(e, {Checkpoint::Kind::elapsed_seconds, -1.0}),
      aclr::ContractError);
}

TEST_CASE("truncation is monotone in the checkpoint") {
  aclr::Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Event e = testutil::random_tree_event(
        "m" + std::to_string(trial), 0, 2 + static_cast<int>(rng.below(20)),
        rng);
    const double v1 = 1.0 + static_cast<double>(rng.below(10));
    const double v2 = v1 + 1.0 + static_cast<double>(rng.below(10));
    Event a = aclr::truncate_event(e, {Checkpoint::Kind::post_count, v1});
    Event b = aclr::truncate_event(e, {Checkpoint::Kind::post_count, v2});
    std::set<std::string> in_b;
    for (const Post& p : b.posts) in_b.insert(p.id);
    for (const Post& p : a.posts) {
      CHECK(in_b.count(p.id) == 1);  // smaller cutoff is a subset
    }
    CHECK(a.posts.size() <= std::min<std::size_t>(
                                e.posts.size(), static_cast<std::size_t>(v1)));
  }
}

TEST_CASE("fold splits partition and stratify") {
  aclr::Rng rng(23);
  Dataset ds;
  ds.name = "folds";
  for (int i = 0; i < 47; ++i) {
    ds.events.push_back(testutil::random_tree_event(
        "e" + std::to_string(i), i < 21 ? 1 : 0, 1, rng));
  }

  const aclr::FoldPlan plan = aclr::split_folds(ds, 5, 99);
  CHECK(plan.k == 5);
  CHECK(plan.assignment.size() == 47);

  long fold_class_counts[5][2] = {};
  for (const Event& e : ds.events) {
    const int f = plan.assignment.at(e.id);
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++fold_class_counts[f][e.label];
  }
  for (int c = 0; c < 2; ++c) {
    long lo = fold_class_counts[0][c], hi = lo;
    for (int f = 1; f < 5; ++f) {
      lo = std::min(lo, fold_class_counts[f][c]);
      hi = std::max(hi, fold_class_counts[f][c]);
    }
    CHECK(hi - lo <= 1);  // per-class fold sizes differ by at most one
  }

  const aclr::FoldPlan again = aclr::split_folds(ds, 5, 99);
  CHECK(again.assignment == plan.assignment);
  const aclr::FoldPlan other = aclr::split_folds(ds, 5, 100);
  CHECK(other.assignment != plan.assignment);

  Dataset tiny;
  tiny.name = "tiny";
  for (int i = 0; i < 6; ++i) {
    tiny.events.push_back(testutil::random_tree_event(
        "t" + std::to_string(i), i == 0 ? 1 : 0, 1, rng));
  }
  CHECK_THROWS_AS(aclr::split_folds(tiny, 5, 1), aclr::StratificationError);
}

TEST_CASE("subset keeps dataset order and rejects unknown ids") {
  aclr::Corpus corpus = testutil::random_corpus("s", Role::target, 6, 4, 4, 7);
  aclr::Corpus sub = aclr::subset(corpus, {"s_e4", "s_e1"});
  REQUIRE(sub.dataset.events.size() == 2);
  CHECK(sub.dataset.events[0].id == "s_e1");  // dataset order, not ask order
  CHECK(sub.dataset.events[1].id == "s_e4");
  CHECK_THROWS_AS(aclr::subset(corpus, {"s_e1", "ghost"}),
                  aclr::ContractError);
}

}  // TEST_SUITE
