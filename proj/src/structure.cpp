#include <algorithm>
#include <map>
#include <set>

#include "respetri/analysis.hpp"

namespace respetri {

namespace {

struct Graph {
  std::vector<std::string> names;  // sorted
  std::vector<std::vector<std::size_t>> succ;
};

Graph bipartite_graph(const NetModel& model) {
  Graph g;
  for (const auto& p : model.places) g.names.push_back(p.id);
  for (const auto& t : model.transitions) g.names.push_back(t.id);
  std::sort(g.names.begin(), g.names.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.names.size(); ++i) index[g.names[i]] = i;
  std::vector<std::set<std::size_t>> succ(g.names.size());
  for (const auto& t : model.transitions) {
    const std::size_t ti = index.at(t.id);
    for (const auto& a : t.inputs) succ[index.at(a.place)].insert(ti);
    for (const auto& a : t.outputs) succ[ti].insert(index.at(a.place));
    for (const auto& a : t.reads) {
      succ[index.at(a.place)].insert(ti);
      succ[ti].insert(index.at(a.place));
    }
  }
  for (auto& s : succ) g.succ.emplace_back(s.begin(), s.end());
  return g;
}

void cycles_from(const Graph& g, std::size_t start, std::size_t max_length, std::vector<std::size_t>& path,
                 std::vector<char>& on_path, std::vector<std::vector<std::string>>& out) {
  const std::size_t v = path.back();
  for (std::size_t w : g.succ[v]) {
    if (w == start) {
      std::vector<std::string> cycle;
      for (std::size_t n : path) cycle.push_back(g.names[n]);
      out.push_back(std::move(cycle));
      continue;
    }
    // Only nodes above the start, so each cycle is found from its smallest id.
    if (w < start || on_path[w] || path.size() >= max_length) continue;
    on_path[w] = 1;
    path.push_back(w);
    cycles_from(g, start, max_length, path, on_path, out);
    path.pop_back();
    on_path[w] = 0;
  }
}

}  // namespace

std::vector<std::vector<std::string>> find_cycles(const NetModel& model, std::size_t max_length) {
  const Graph g = bipartite_graph(model);
  std::vector<std::vector<std::string>> out;
  std::vector<char> on_path(g.names.size(), 0);
  for (std::size_t s = 0; s < g.names.size(); ++s) {
    std::vector<std::size_t> path{s};
    on_path[s] = 1;
    cycles_from(g, s, max_length, path, on_path, out);
    on_path[s] = 0;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SiphonsAndTraps siphons_and_traps(const NetModel& model, std::size_t max_size) {
  std::vector<std::string> places;
  for (const auto& p : model.places) places.push_back(p.id);
  std::sort(places.begin(), places.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < places.size(); ++i) index[places[i]] = i;

  // Per transition: places it takes from and places it puts into.
  std::vector<std::vector<std::size_t>> pre, post;
  for (const auto& t : model.transitions) {
    std::set<std::size_t> in, out;
    for (const auto& a : t.inputs) in.insert(index.at(a.place));
    for (const auto& a : t.outputs) out.insert(index.at(a.place));
    for (const auto& a : t.reads) {
      in.insert(index.at(a.place));
      out.insert(index.at(a.place));
    }
    pre.emplace_back(in.begin(), in.end());
    post.emplace_back(out.begin(), out.end());
  }

  auto touches = [](const std::vector<std::size_t>& places_of_t, const std::vector<char>& member) {
    return std::any_of(places_of_t.begin(), places_of_t.end(), [&](std::size_t p) { return member[p] != 0; });
  };
  auto is_siphon = [&](const std::vector<char>& member) {
    for (std::size_t t = 0; t < pre.size(); ++t)
      if (touches(post[t], member) && !touches(pre[t], member)) return false;
    return true;
  };
  auto is_trap = [&](const std::vector<char>& member) {
    for (std::size_t t = 0; t < pre.size(); ++t)
      if (touches(pre[t], member) && !touches(post[t], member)) return false;
    return true;
  };
  auto contains_any = [](const std::vector<std::vector<std::size_t>>& found, const std::vector<std::size_t>& set) {
    return std::any_of(found.begin(), found.end(), [&](const auto& f) {
      return std::includes(set.begin(), set.end(), f.begin(), f.end());
    });
  };

  std::vector<std::vector<std::size_t>> siphons, traps;
  const std::size_t n = places.size();
  for (std::size_t k = 1; k <= std::min(max_size, n); ++k) {
    std::vector<std::size_t> combo(k);
    for (std::size_t i = 0; i < k; ++i) combo[i] = i;
    while (true) {
      std::vector<char> member(n, 0);
      for (std::size_t p : combo) member[p] = 1;
      if (!contains_any(siphons, combo) && is_siphon(member)) siphons.push_back(combo);
      if (!contains_any(traps, combo) && is_trap(member)) traps.push_back(combo);
      std::size_t i = k;
      while (i > 0 && combo[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++combo[i - 1];
      for (std::size_t j = i; j < k; ++j) combo[j] = combo[j - 1] + 1;
    }
  }

  auto names = [&](const std::vector<std::vector<std::size_t>>& sets) {
    std::vector<std::vector<std::string>> out;
    for (const auto& s : sets) {
      std::vector<std::string> named;
      for (std::size_t p : s) named.push_back(places[p]);
      out.push_back(std::move(named));
    }
    return out;
  };
  return {names(siphons), names(traps)};
}

}  // namespace respetri
