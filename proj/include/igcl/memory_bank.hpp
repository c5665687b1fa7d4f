#pragma once

// Fixed-capacity store of accumulated precursor perturbations. Each stored
// entry is an N x (h+1) perturbation matrix; newly generated single-variable
// patterns are broadcast-added into every entry, which is how multi-variable
// precursor combinations accumulate over iterations. Entries carry an
// importance score (summed anchor similarity); eviction always removes the
// least important entry, so hard negatives survive.
//
// The default stores perturbations and forms negatives by adding them to the
// current segment's last window, which keeps negatives temporally coherent
// with the batch being contrasted. `literal_windows` instead stores the full
// injected window and substitutes it verbatim.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "igcl/contrastive.hpp"
#include "igcl/diffusion.hpp"
#include "igcl/errors.hpp"
#include "igcl/mat.hpp"
#include "igcl/series.hpp"

namespace igcl {

struct MemoryEntry {
  Mat pattern;  // N x (h+1)
  double importance = 0.0;
  long age = 0;  // insertion counter; smaller = older
};

struct MemoryBank {
  int capacity = 0;  // K
  bool literal_windows = false;
  std::vector<MemoryEntry> entries;
  long next_age = 0;

  int size() const { return static_cast<int>(entries.size()); }
  bool full() const { return size() >= capacity; }
};

/// Adds the single-variable pattern into every stored entry on its variable
/// row, growing each entry's variable support.
inline void broadcast_inject(MemoryBank& bank, const PrecursorPattern& pattern) {
  const int w = pattern.window();
  for (MemoryEntry& e : bank.entries) {
    if (e.pattern.cols != w)
      throw ShapeMismatch("pattern length " + std::to_string(w) + ", entries hold " +
                          std::to_string(e.pattern.cols));
    if (pattern.variable < 0 || pattern.variable >= e.pattern.rows)
      throw ShapeMismatch("pattern variable out of range");
    double* row = e.pattern.row(pattern.variable);
    for (int i = 0; i < w; ++i) row[i] += pattern.values[i];
  }
}

/// The K+1 negative segments for one batch: index 0 carries the current
/// pattern, indices 1..K the stored entries. Only the last window differs
/// from the clean segment.
inline std::vector<NormalizedSegment> negative_windows(const MemoryBank& bank,
                                                       const NormalizedSegment& segment,
                                                       const PrecursorPattern& current) {
  std::vector<NormalizedSegment> out;
  out.reserve(bank.size() + 1);
  out.push_back(inject_pattern(segment, current));
  const int w = segment.lookback + 1;
  const int start = segment.length() - w;
  for (const MemoryEntry& e : bank.entries) {
    if (e.pattern.rows != segment.vars() || e.pattern.cols != w)
      throw ShapeMismatch("entry pattern shape does not match the segment");
    NormalizedSegment neg = segment;
    for (int v = 0; v < segment.vars(); ++v)
      for (int i = 0; i < w; ++i) {
        if (bank.literal_windows)
          neg.data(v, start + i) = e.pattern(v, i);
        else
          neg.data(v, start + i) += e.pattern(v, i);
      }
    out.push_back(std::move(neg));
  }
  return out;
}

/// Summed similarity between the anchor representations and one negative
/// track over the anchor range (inclusive). High = hard negative.
inline double importance_score(const Mat& clean_track, const Mat& negative_track, int anchor_begin,
                               int anchor_end, SimilarityKind kind) {
  if (!clean_track.same_shape(negative_track)) throw ShapeMismatch("track shapes differ");
  if (anchor_begin < 0 || anchor_end >= clean_track.rows || anchor_begin > anchor_end)
    throw OutOfRange("anchor range");
  double total = 0.0;
  for (int c = anchor_begin; c <= anchor_end; ++c)
    total += similarity(clean_track.row(c), negative_track.row(c), clean_track.cols, kind);
  return total;
}

/// Refreshes every entry's importance from this iteration's representations.
/// entry_tracks[j] must be the track encoded from entry j's negative segment.
inline void update_importance(MemoryBank& bank, const Mat& clean_track,
                              const std::vector<const Mat*>& entry_tracks, int anchor_begin,
                              int anchor_end, SimilarityKind kind) {
  if (static_cast<int>(entry_tracks.size()) != bank.size())
    throw ShapeMismatch("expected one track per entry");
  for (int j = 0; j < bank.size(); ++j)
    bank.entries[j].importance =
        importance_score(clean_track, *entry_tracks[j], anchor_begin, anchor_end, kind);
}

/// Builds the candidate entry for the current pattern: the accumulated
/// perturbation matrix by default, the literal injected window otherwise.
inline MemoryEntry candidate_entry(const MemoryBank& bank, const NormalizedSegment& segment,
                                   const PrecursorPattern& current, double importance) {
  const int w = segment.lookback + 1;
  if (current.window() != w) throw ShapeMismatch("pattern length mismatch");
  MemoryEntry e;
  e.importance = importance;
  if (bank.literal_windows) {
    const int start = segment.length() - w;
    e.pattern = Mat(segment.vars(), w);
    for (int v = 0; v < segment.vars(); ++v)
      for (int i = 0; i < w; ++i) e.pattern(v, i) = segment.data(v, start + i);
  } else {
    e.pattern = Mat(segment.vars(), w);
  }
  for (int i = 0; i < w; ++i) e.pattern(current.variable, i) += current.values[i];
  return e;
}

/// Appends the entry, then — only once the bank is past capacity — removes
/// the minimum-importance entry, breaking ties toward the oldest. Returns
/// the evicted importance, if any.
inline std::optional<double> insert_and_evict(MemoryBank& bank, MemoryEntry entry) {
  entry.age = bank.next_age++;
  bank.entries.push_back(std::move(entry));
  if (bank.size() <= bank.capacity) return std::nullopt;
  int victim = 0;
  for (int j = 1; j < bank.size(); ++j) {
    const MemoryEntry& e = bank.entries[j];
    const MemoryEntry& v = bank.entries[victim];
    if (e.importance < v.importance || (e.importance == v.importance && e.age < v.age)) victim = j;
  }
  double evicted = bank.entries[victim].importance;
  bank.entries.erase(bank.entries.begin() + victim);
  return evicted;
}

}  // namespace igcl
