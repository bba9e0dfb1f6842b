#include "aclr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "aclr/rng.hpp"

namespace aclr {

namespace {

using nlohmann::ordered_json;

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

}  // namespace

void canonicalize_posts(Event& event) {
  std::stable_sort(event.posts.begin(), event.posts.end(),
                   [](const Post& a, const Post& b) {
                     const int ra = a.parent.has_value() ? 1 : 0;
                     const int rb = b.parent.has_value() ? 1 : 0;
                     if (ra != rb) return ra < rb;
                     if (a.delay_seconds != b.delay_seconds) {
                       return a.delay_seconds < b.delay_seconds;
                     }
                     return a.id < b.id;
                   });
}

void validate_event(const Event& event) {
  auto fail = [&](const std::string& why) {
    throw LoadError("event " + (event.id.empty() ? "<unnamed>" : event.id) +
                    ": " + why);
  };
  if (event.id.empty()) fail("empty event id");
  if (event.label != 0 && event.label != 1) {
    fail("label must be 0 or 1, got " + std::to_string(event.label));
  }
  if (event.posts.empty()) fail("no posts");

  const std::size_t n = event.posts.size();
  std::map<std::string, std::size_t> index;
  std::size_t roots = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Post& p = event.posts[i];
    if (p.id.empty()) fail("post " + std::to_string(i) + " has an empty id");
    if (!index.emplace(p.id, i).second) fail("duplicate post id " + p.id);
    if (!p.parent.has_value()) ++roots;
    if (!std::isfinite(p.delay_seconds) || p.delay_seconds < 0.0) {
      fail("post " + p.id + " has invalid delay " +
           std::to_string(p.delay_seconds));
    }
  }
  if (roots != 1) fail(std::to_string(roots) + " roots, expected exactly 1");
  if (event.posts[0].parent.has_value()) {
    fail("first post " + event.posts[0].id + " is not the root");
  }
  if (event.posts[0].delay_seconds != 0.0) {
    fail("root delay is " + std::to_string(event.posts[0].delay_seconds) +
         ", expected 0");
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Post& p = event.posts[i];
    if (!p.parent.has_value()) continue;
    auto it = index.find(*p.parent);
    if (it == index.end()) {
      fail("post " + p.id + " references missing parent " + *p.parent);
    }
    if (it->second == i) fail("post " + p.id + " is its own parent");
  }

  // Every parent chain must reach the root in at most n steps.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cur = i, steps = 0;
    while (event.posts[cur].parent.has_value()) {
      cur = index.at(*event.posts[cur].parent);
      if (++steps > n) {
        fail("post " + event.posts[i].id + " sits on a parent cycle");
      }
    }
  }

  for (std::size_t i = 2; i < n; ++i) {
    const Post& a = event.posts[i - 1];
    const Post& b = event.posts[i];
    if (a.delay_seconds > b.delay_seconds ||
        (a.delay_seconds == b.delay_seconds && a.id >= b.id)) {
      fail("posts " + a.id + " and " + b.id + " are out of order");
    }
  }
}

void validate_dataset(const Dataset& dataset) {
  std::set<std::string> ids;
  for (const Event& e : dataset.events) {
    validate_event(e);
    if (!ids.insert(e.id).second) {
      throw LoadError("dataset " + dataset.name + ": duplicate event id " +
                      e.id);
    }
  }
}

namespace {

Post parse_post(const ordered_json& j, const std::string& where) {
  if (!j.is_object()) throw LoadError(where + ": post is not an object");
  Post p;
  if (!j.contains("id") || !j["id"].is_string()) {
    throw LoadError(where + ": post id missing or not a string");
  }
  p.id = j["id"].get<std::string>();
  if (j.contains("parent") && !j["parent"].is_null()) {
    if (!j["parent"].is_string()) {
      throw LoadError(where + ": post " + p.id + ": parent must be a string");
    }
    p.parent = j["parent"].get<std::string>();
  }
  if (!j.contains("t") || !j["t"].is_number()) {
    throw LoadError(where + ": post " + p.id + ": t missing or not a number");
  }
  p.delay_seconds = j["t"].get<double>();
  if (j.contains("text") && !j["text"].is_null()) {
    if (!j["text"].is_string()) {
      throw LoadError(where + ": post " + p.id + ": text must be a string");
    }
    p.text = j["text"].get<std::string>();
  }
  return p;
}

}  // namespace

Dataset load_dataset(const std::string& path, const std::string& name,
                     Role role) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset file " + path);

  Dataset ds;
  ds.name = name;
  ds.role = role;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw LoadError(where + ": " + e.what());
    }
    if (!j.is_object()) throw LoadError(where + ": line is not an object");
    if (!j.contains("id") || !j["id"].is_string()) {
      throw LoadError(where + ": event id missing or not a string");
    }
    Event e;
    e.id = j["id"].get<std::string>();
    if (!j.contains("label") || !j["label"].is_number_integer()) {
      throw LoadError(where + ": event " + e.id +
                      ": label missing or not an integer");
    }
    e.label = j["label"].get<int>();
    if (!j.contains("posts") || !j["posts"].is_array()) {
      throw LoadError(where + ": event " + e.id +
                      ": posts missing or not an array");
    }
    for (const auto& pj : j["posts"]) {
      e.posts.push_back(parse_post(pj, where + ": event " + e.id));
    }
    canonicalize_posts(e);
    try {
      validate_event(e);
    } catch (const LoadError& err) {
      throw LoadError(where + ": " + err.what());
    }
    ds.events.push_back(std::move(e));
  }

  std::set<std::string> seen;
  for (const Event& e : ds.events) {
    if (!seen.insert(e.id).second) {
      throw LoadError(path + ": duplicate event id " + e.id);
    }
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  validate_dataset(dataset);
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  for (const Event& e : dataset.events) {
    ordered_json j;
    j["id"] = e.id;
    j["label"] = e.label;
    j["posts"] = ordered_json::array();
    for (const Post& p : e.posts) {
      ordered_json pj;
      pj["id"] = p.id;
      if (p.parent.has_value()) {
        pj["parent"] = *p.parent;
      } else {
        pj["parent"] = nullptr;
      }
      pj["t"] = p.delay_seconds;
      if (p.text.has_value()) pj["text"] = *p.text;
      j["posts"].push_back(std::move(pj));
    }
    out << j.dump() << "\n";
  }
  if (!out) throw LoadError("failed writing " + path);
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open embedding file " + path);

  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw LoadError(where + ": " + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || !j.contains("dim") ||
          !j["dim"].is_number_integer() || j["dim"].get<int>() <= 0) {
        throw LoadError(where + ": expected header {\"dim\": d} with d > 0");
      }
      table.dim = j["dim"].get<int>();
      have_header = true;
      continue;
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        !j.contains("vec") || !j["vec"].is_array()) {
      throw LoadError(where + ": expected {\"id\": str, \"vec\": [...]}");
    }
    const std::string id = j["id"].get<std::string>();
    const auto& arr = j["vec"];
    if (static_cast<int>(arr.size()) != table.dim) {
      throw LoadError(where + ": vector for " + id + " has length " +
                      std::to_string(arr.size()) + ", expected " +
                      std::to_string(table.dim));
    }
    Vector v(table.dim);
    for (int i = 0; i < table.dim; ++i) {
      if (!arr[i].is_number()) {
        throw LoadError(where + ": vector for " + id + " has a non-number");
      }
      v(i) = arr[i].get<double>();
      if (!std::isfinite(v(i))) {
        throw LoadError(where + ": vector for " + id + " has NaN or Inf");
      }
    }
    if (!table.vectors.emplace(id, std::move(v)).second) {
      throw LoadError(where + ": duplicate embedding id " + id);
    }
  }
  if (!have_header) throw LoadError(path + ": missing {\"dim\": d} header");
  return table;
}

void save_embeddings(const std::string& path, const EmbeddingTable& table) {
  if (table.dim <= 0) throw ContractError("save_embeddings: dim must be > 0");
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  ordered_json header;
  header["dim"] = table.dim;
  out << header.dump() << "\n";
  std::vector<std::string> ids;
  ids.reserve(table.vectors.size());
  for (const auto& [id, v] : table.vectors) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (const std::string& id : ids) {
    const Vector& v = table.vectors.at(id);
    ordered_json j;
    j["id"] = id;
    j["vec"] = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j["vec"].push_back(v(i));
    out << j.dump() << "\n";
  }
  if (!out) throw LoadError("failed writing " + path);
}

namespace {

std::uint64_t fnv1a64(const std::string& s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t kBucketBasis = 14695981039346656037ull;
constexpr std::uint64_t kSignBasis = 0x9ae16a3b2f90404full;

}  // namespace

Vector embed_text(const std::string& text, const HashingEmbedder& embedder) {
  if (embedder.dim <= 0) {
    throw ConfigError("HashingEmbedder: dim must be positive");
  }
  // Integer bucket counts first: addition of integers commutes exactly, so
  // token order cannot change even the last bit of the result.
  std::vector<long long> counts(static_cast<std::size_t>(embedder.dim), 0);
  std::istringstream ss(text);
  std::string token;
  while (ss >> token) {
    const std::uint64_t hb = fnv1a64(token, kBucketBasis);
    const std::uint64_t hs = fnv1a64(token, kSignBasis);
    const std::size_t bucket =
        static_cast<std::size_t>(hb % static_cast<std::uint64_t>(embedder.dim));
    counts[bucket] += (hs & 1ull) ? 1 : -1;
  }
  Vector v(embedder.dim);
  for (int i = 0; i < embedder.dim; ++i) {
    v(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]);
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

Matrix embed_event(const Event& event, const EmbeddingTable& table) {
  if (table.dim <= 0) throw ContractError("embed_event: table dim must be > 0");
  std::vector<std::string> missing;
  for (const Post& p : event.posts) {
    if (table.vectors.find(p.id) == table.vectors.end()) {
      missing.push_back(p.id);
    }
  }
  if (!missing.empty()) {
    throw EmbeddingError("event " + event.id +
                         ": no embeddings for posts: " + join_ids(missing));
  }
  Matrix x(static_cast<Eigen::Index>(event.posts.size()), table.dim);
  for (std::size_t i = 0; i < event.posts.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        table.vectors.at(event.posts[i].id).transpose();
  }
  return x;
}

Matrix embed_event(const Event& event, const HashingEmbedder& embedder) {
  std::vector<std::string> missing;
  for (const Post& p : event.posts) {
    if (!p.text.has_value()) missing.push_back(p.id);
  }
  if (!missing.empty()) {
    throw EmbeddingError("event " + event.id +
                         ": posts without text: " + join_ids(missing));
  }
  Matrix x(static_cast<Eigen::Index>(event.posts.size()), embedder.dim);
  for (std::size_t i = 0; i < event.posts.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        embed_text(*event.posts[i].text, embedder).transpose();
  }
  return x;
}

EmbeddingTable build_table(const Dataset& dataset,
                           const HashingEmbedder& embedder) {
  EmbeddingTable table;
  table.dim = embedder.dim;
  for (const Event& e : dataset.events) {
    for (const Post& p : e.posts) {
      if (!p.text.has_value()) {
        throw EmbeddingError("event " + e.id + ": post " + p.id +
                             " has no text");
      }
      Vector v = embed_text(*p.text, embedder);
      auto [it, inserted] = table.vectors.emplace(p.id, v);
      if (!inserted && (it->second - v).cwiseAbs().maxCoeff() != 0.0) {
        throw EmbeddingError("post id " + p.id +
                             " reused with different text");
      }
    }
  }
  return table;
}

Event truncate_event(const Event& event, const Checkpoint& checkpoint) {
  if (std::isnan(checkpoint.value)) {
    throw ContractError("truncate_event: checkpoint value is NaN");
  }
  if (checkpoint.kind == Checkpoint::Kind::post_count &&
      checkpoint.value < 1.0) {
    throw ContractError("truncate_event: post count must be >= 1, got " +
                        std::to_string(checkpoint.value));
  }
  if (checkpoint.kind == Checkpoint::Kind::elapsed_seconds &&
      checkpoint.value < 0.0) {
    throw ContractError("truncate_event: elapsed cutoff must be >= 0, got " +
                        std::to_string(checkpoint.value));
  }

  const std::size_t n = event.posts.size();
  std::vector<char> within(n, 0);
  if (checkpoint.kind == Checkpoint::Kind::post_count) {
    const double c = std::floor(checkpoint.value);
    for (std::size_t i = 0; i < n; ++i) {
      within[i] = (static_cast<double>(i) < c) ? 1 : 0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      within[i] = (event.posts[i].delay_seconds <= checkpoint.value) ? 1 : 0;
    }
  }

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(event.posts[i].id, i);

  // keep[i]: post i and its whole ancestor chain fit under the checkpoint.
  std::vector<char> memo(n, 0);  // 0 unknown, 1 keep, 2 drop
  auto keep = [&](auto&& self, std::size_t i) -> bool {
    if (memo[i]) return memo[i] == 1;
    bool ok = within[i] != 0;
    if (ok && event.posts[i].parent.has_value()) {
      ok = self(self, index.at(*event.posts[i].parent));
    }
    memo[i] = ok ? 1 : 2;
    return ok;
  };

  Event out;
  out.id = event.id;
  out.label = event.label;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep(keep, i)) out.posts.push_back(event.posts[i]);
  }
  return out;
}

std::vector<std::string> FoldPlan::fold_ids(int fold) const {
  std::vector<std::string> ids;
  for (const auto& [id, f] : assignment) {
    if (f == fold) ids.push_back(id);
  }
  return ids;
}

FoldPlan split_folds(const Dataset& dataset, int k, std::uint64_t seed) {
  if (k < 2) throw ContractError("split_folds: k must be >= 2");
  std::vector<std::string> by_class[2];
  for (const Event& e : dataset.events) {
    if (e.label != 0 && e.label != 1) {
      throw ContractError("split_folds: event " + e.id + " has label " +
                          std::to_string(e.label));
    }
    by_class[e.label].push_back(e.id);
  }
  for (int c = 0; c < 2; ++c) {
    if (static_cast<int>(by_class[c].size()) < k) {
      throw StratificationError(
          "split_folds: class " + std::to_string(c) + " has " +
          std::to_string(by_class[c].size()) + " events, need at least " +
          std::to_string(k));
    }
  }
  FoldPlan plan;
  plan.k = k;
  Rng rng(mix_seed(seed, 0xF01D5ull));
  for (int c = 0; c < 2; ++c) {
    rng.shuffle(by_class[c]);
    for (std::size_t i = 0; i < by_class[c].size(); ++i) {
      plan.assignment.emplace(by_class[c][i], static_cast<int>(i % k));
    }
  }
  return plan;
}

Corpus subset(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::set<std::string> want(ids.begin(), ids.end());
  Corpus out;
  out.dataset.name = corpus.dataset.name;
  out.dataset.role = corpus.dataset.role;
  for (const Event& e : corpus.dataset.events) {
    if (want.erase(e.id) > 0) out.dataset.events.push_back(e);
  }
  if (!want.empty()) {
    throw ContractError("subset: unknown event ids: " +
                        join_ids({want.begin(), want.end()}));
  }
  out.table = corpus.table;
  return out;
}

}  // namespace aclr
