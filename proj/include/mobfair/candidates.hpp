#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mobfair/mapping.hpp"

namespace mobfair {

// A cell-subset supported by at least one object, with the sorted object
// indices whose cellsets contain it.
struct Candidate {
  std::uint32_t grid = 0;
  std::vector<std::uint32_t> cells;
  std::vector<ObjectIndex> tidset;

  std::size_t support() const { return tidset.size(); }

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

using CandidateList = std::vector<Candidate>;

// Every non-empty subset of cells contained in at least one cellset, with its
// exact tidset. Bottom-up over prefix equivalence classes: size-1 candidates
// come from the cell -> objects inverted index, and each class extends its
// prefix by joining sibling atoms through tidset intersection. Output is in
// lexicographic order of the cell tuples. Top-level classes are mined on up to
// `workers` threads.
CandidateList mine(std::span<const CellSet> cellsets, unsigned workers = 1);

// Sorted-merge intersection of two sorted id lists.
std::vector<ObjectIndex> intersect_sorted(std::span<const ObjectIndex> a, std::span<const ObjectIndex> b);

// Union of per-grid candidate lists. Lists are shared, not copied, so several
// pools over overlapping grid subsets stay cheap. Candidates from different
// grids are never merged.
class CandidatePool {
 public:
  CandidatePool() = default;

  void add(std::shared_ptr<const CandidateList> list);

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.back(); }
  bool empty() const { return size() == 0; }
  const Candidate& operator[](std::size_t i) const;

  const std::vector<std::shared_ptr<const CandidateList>>& parts() const { return parts_; }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    std::size_t i = 0;
    for (const auto& part : parts_) {
      for (const auto& c : *part) fn(i++, c);
    }
  }

 private:
  std::vector<std::shared_ptr<const CandidateList>> parts_;
  std::vector<std::size_t> offsets_;  // cumulative sizes
};

CandidatePool pool(std::vector<CandidateList> per_grid);
CandidatePool pool(std::span<const std::shared_ptr<const CandidateList>> per_grid);

// JSON-lines dump, one `{grid, cells, support, tidset}` object per line with
// object ids resolved through `objects`.
std::string candidates_jsonl(const CandidateList& candidates, const GridFamily& family,
                             const ObjectRegistry& objects);

}  // namespace mobfair
