#include "mobfair/candidates.hpp"

#include <algorithm>
#include <cassert>
#include <map>

#include <json.hpp>

#include "mobfair/parallel.hpp"

namespace mobfair {

namespace {

struct Atom {
  std::uint32_t cell;
  std::vector<ObjectIndex> tidset;
};

// Emits prefix + atoms[i] for each atom and recurses into the class formed by
// joining atoms[i] with every later sibling.
void extend(std::uint32_t grid, std::vector<std::uint32_t>& prefix, const std::vector<Atom>& atoms,
            CandidateList& out) {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    prefix.push_back(atoms[i].cell);
    out.push_back({grid, prefix, atoms[i].tidset});
    std::vector<Atom> next;
    for (std::size_t j = i + 1; j < atoms.size(); ++j) {
      auto joined = intersect_sorted(atoms[i].tidset, atoms[j].tidset);
      if (!joined.empty()) next.push_back({atoms[j].cell, std::move(joined)});
    }
    if (!next.empty()) extend(grid, prefix, next, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<ObjectIndex> intersect_sorted(std::span<const ObjectIndex> a, std::span<const ObjectIndex> b) {
  std::vector<ObjectIndex> out;
  out.reserve(std::min(a.size(), b.size()));
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

CandidateList mine(std::span<const CellSet> cellsets, unsigned workers) {
  if (cellsets.empty()) return {};
  const std::uint32_t grid = cellsets.front().grid;

  std::map<std::uint32_t, std::vector<ObjectIndex>> inverted;
  for (const auto& cs : cellsets) {
    for (std::uint32_t cell : cs.cells) inverted[cell].push_back(cs.object);
  }
  std::vector<Atom> atoms;
  atoms.reserve(inverted.size());
  for (auto& [cell, objects] : inverted) {
    std::sort(objects.begin(), objects.end());
    objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
    atoms.push_back({cell, std::move(objects)});
  }

  // Each top-level atom roots an independent prefix class.
  std::vector<CandidateList> parts(atoms.size());
  parallel_for(atoms.size(), workers, [&](std::size_t i) {
    std::vector<std::uint32_t> prefix;
    std::vector<Atom> next;
    for (std::size_t j = i + 1; j < atoms.size(); ++j) {
      auto joined = intersect_sorted(atoms[i].tidset, atoms[j].tidset);
      if (!joined.empty()) next.push_back({atoms[j].cell, std::move(joined)});
    }
    parts[i].push_back({grid, {atoms[i].cell}, atoms[i].tidset});
    if (!next.empty()) {
      prefix.push_back(atoms[i].cell);
      extend(grid, prefix, next, parts[i]);
    }
  });

  CandidateList out;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.reserve(total);
  for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
#ifndef NDEBUG
  for (std::size_t k = 1; k < out.size(); ++k) assert(out[k - 1].cells < out[k].cells);
#endif
  return out;
}

void CandidatePool::add(std::shared_ptr<const CandidateList> list) {
  const std::size_t before = size();
  offsets_.push_back(before + list->size());
  parts_.push_back(std::move(list));
}

const Candidate& CandidatePool::operator[](std::size_t i) const {
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
  const auto part = static_cast<std::size_t>(it - offsets_.begin());
  const std::size_t start = part == 0 ? 0 : offsets_[part - 1];
  return (*parts_[part])[i - start];
}

CandidatePool pool(std::vector<CandidateList> per_grid) {
  CandidatePool p;
  for (auto& list : per_grid) p.add(std::make_shared<const CandidateList>(std::move(list)));
  return p;
}

CandidatePool pool(std::span<const std::shared_ptr<const CandidateList>> per_grid) {
  CandidatePool p;
  for (const auto& list : per_grid) p.add(list);
  return p;
}

std::string candidates_jsonl(const CandidateList& candidates, const GridFamily& family,
                             const ObjectRegistry& objects) {
  std::string out;
  for (const auto& c : candidates) {
    nlohmann::json tids = nlohmann::json::array();
    for (ObjectIndex o : c.tidset) tids.push_back(objects.id(o));
    const nlohmann::json line = {{"grid", family.grids.at(c.grid).id},
                                 {"cells", c.cells},
                                 {"support", c.support()},
                                 {"tidset", std::move(tids)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace mobfair
