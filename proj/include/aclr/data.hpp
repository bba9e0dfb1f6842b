#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "aclr/tensor.hpp"

namespace aclr {

/// A single post in a propagation tree. `parent` is absent exactly for the
/// claim (root) post; `delay_seconds` measures time since the claim.
struct Post {
  std::string id;
  std::optional<std::string> parent;
  double delay_seconds = 0.0;
  std::optional<std::string> text;

  bool operator==(const Post&) const = default;
};

/// One claim with its responses. Posts are ordered root first, then by
/// ascending (delay_seconds, id); ids are unique; every parent reference
/// resolves inside the event and leads back to the root.
struct Event {
  std::string id;
  int label = 0;  // 1 = rumor, 0 = non-rumor
  std::vector<Post> posts;

  const Post& root() const { return posts.front(); }
  bool operator==(const Event&) const = default;
};

enum class Role { source, target };

struct Dataset {
  std::string name;
  Role role = Role::source;
  std::vector<Event> events;

  bool operator==(const Dataset&) const = default;
};

/// Checks every Event invariant; throws LoadError naming the event and the
/// first violated condition.
void validate_event(const Event& event);
void validate_dataset(const Dataset& dataset);

/// Sorts posts into canonical order: root first, then (delay, id).
void canonicalize_posts(Event& event);

/// Reads one JSON object per line:
///   {"id": str, "label": 0|1, "posts": [{"id": str, "parent": str|null,
///    "t": seconds, "text": str?}, ...]}
/// Posts may arrive in any order; they are sorted into canonical order and
/// validated. Errors carry the line number and event id.
Dataset load_dataset(const std::string& path, const std::string& name,
                     Role role);
void save_dataset(const std::string& path, const Dataset& dataset);

/// Post id -> embedding row. All vectors share `dim`.
struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, Vector> vectors;
};

/// File format: a {"dim": d} header line, then {"id": str, "vec": [d
/// doubles]} per line. Saved in ascending id order so output is
/// deterministic.
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const std::string& path, const EmbeddingTable& table);

/// Text-only fallback provider: hashed bag of words. Tokens split on
/// whitespace, FNV-1a into `dim` signed buckets, then L2-normalized.
/// Accumulation is by integer counts, so token order cannot matter.
struct HashingEmbedder {
  int dim = 0;
};

Vector embed_text(const std::string& text, const HashingEmbedder& embedder);

/// n_posts x dim matrix, one row per post in event order. Missing table
/// entries (or missing text under hashing) raise EmbeddingError listing the
/// offending post ids.
Matrix embed_event(const Event& event, const EmbeddingTable& table);
Matrix embed_event(const Event& event, const HashingEmbedder& embedder);

/// Materializes hashed embeddings for every post of every event.
EmbeddingTable build_table(const Dataset& dataset,
                           const HashingEmbedder& embedder);

/// A dataset together with the embeddings that cover it.
struct Corpus {
  Dataset dataset;
  EmbeddingTable table;
};

/// Early-detection cutoff: keep the first `value` posts, or the posts with
/// delay_seconds <= value. Infinity means no cutoff.
struct Checkpoint {
  enum class Kind { post_count, elapsed_seconds };
  Kind kind = Kind::post_count;
  double value = 0.0;
};

/// Restricts an event to the checkpoint, then drops any post whose ancestor
/// chain is not fully kept. The root always survives; relative order is
/// preserved and the result is a valid Event.
Event truncate_event(const Event& event, const Checkpoint& checkpoint);

/// Which fold each event id belongs to. Folds partition the dataset and are
/// stratified: per class, fold sizes differ by at most one.
struct FoldPlan {
  int k = 0;
  std::map<std::string, int> assignment;

  std::vector<std::string> fold_ids(int fold) const;
};

/// Deterministic stratified split. Throws StratificationError when a class
/// has fewer than k events.
FoldPlan split_folds(const Dataset& dataset, int k, std::uint64_t seed);

/// Corpus restricted to the given event ids (order taken from the dataset).
Corpus subset(const Corpus& corpus, const std::vector<std::string>& ids);

}  // namespace aclr
