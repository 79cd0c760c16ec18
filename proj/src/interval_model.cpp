#include "fairmeasure/interval_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fairmeasure {

namespace {

Rational power(const Rational& r, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("negative exponent");
  auto e = static_cast<unsigned>(n);
  return Rational(boost::multiprecision::pow(numerator(r), e), boost::multiprecision::pow(denominator(r), e));
}

BigInt floor_of(const Rational& x) {
  BigInt q = numerator(x) / denominator(x);  // truncates toward zero
  if (x < 0 && Rational(q) != x) q -= 1;
  return q;
}

std::string text(const Rational& r) { return r.str(); }

}  // namespace

NotMarkov::NotMarkov(std::int64_t c, const std::string& what)
    : std::invalid_argument("branch on cell " + std::to_string(c) + ": " + what), cell(c) {}

HitsPartitionPoint::HitsPartitionPoint(std::size_t k)
    : std::domain_error("orbit leaves the open cells at time " + std::to_string(k)), time(k) {}

Partition Partition::explicit_cells(std::vector<Cell> cells) {
  if (cells.empty()) throw std::invalid_argument("partition has no cells");
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.lo < b.lo; });
  std::set<std::int64_t> ids;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (!(cells[k].lo < cells[k].hi)) throw std::invalid_argument("cell " + std::to_string(cells[k].id) + " is empty");
    if (k + 1 < cells.size() && cells[k].hi > cells[k + 1].lo)
      throw std::invalid_argument("cells " + std::to_string(cells[k].id) + " and " + std::to_string(cells[k + 1].id) +
                                  " overlap");
    if (!ids.insert(cells[k].id).second) throw std::invalid_argument("duplicate cell id " + std::to_string(cells[k].id));
  }
  if (*ids.rbegin() - *ids.begin() + 1 != static_cast<std::int64_t>(ids.size()))
    throw std::invalid_argument("cell ids must be consecutive integers");
  Partition p;
  p.kind_ = Kind::Explicit;
  p.cells_ = std::move(cells);
  return p;
}

Partition Partition::geometric(Rational ratio) {
  if (!(ratio > 0 && ratio < 1)) throw std::invalid_argument("geometric ratio must lie in (0, 1)");
  Partition p;
  p.kind_ = Kind::Geometric;
  p.ratio_ = ratio;
  return p;
}

Partition Partition::lattice() {
  Partition p;
  p.kind_ = Kind::Lattice;
  return p;
}

StateSpace Partition::ids() const {
  switch (kind_) {
    case Kind::Explicit: {
      auto [lo, hi] = std::minmax_element(cells_.begin(), cells_.end(),
                                          [](const Cell& a, const Cell& b) { return a.id < b.id; });
      return StateSpace::finite(lo->id, hi->id);
    }
    case Kind::Geometric: return StateSpace::from(1);
    case Kind::Lattice: return StateSpace::integers();
  }
  return {};
}

std::vector<std::int64_t> Partition::window(std::size_t n) const {
  std::vector<std::int64_t> out;
  for (StateId s : ids().window(n)) out.push_back(s.index);
  return out;
}

Cell Partition::cell(std::int64_t id) const {
  switch (kind_) {
    case Kind::Explicit:
      for (const auto& c : cells_)
        if (c.id == id) return c;
      break;
    case Kind::Geometric:
      if (id >= 1) return {id, power(ratio_, id), power(ratio_, id - 1)};
      break;
    case Kind::Lattice: return {id, Rational(id), Rational(id + 1)};
  }
  throw UnresolvableState(StateId(id));
}

std::optional<std::int64_t> Partition::locate(const Rational& x) const {
  switch (kind_) {
    case Kind::Explicit: {
      auto it = std::upper_bound(cells_.begin(), cells_.end(), x,
                                 [](const Rational& v, const Cell& c) { return v < c.lo; });
      if (it == cells_.begin()) return std::nullopt;
      --it;
      if (x > it->lo && x < it->hi) return it->id;
      return std::nullopt;
    }
    case Kind::Geometric: {
      if (!(x > 0 && x < 1)) return std::nullopt;
      Rational hi = 1;
      for (std::int64_t n = 1;; ++n) {
        Rational lo = hi * ratio_;
        if (x > lo) return n;
        if (x == lo) return std::nullopt;
        hi = lo;
      }
    }
    case Kind::Lattice: {
      if (denominator(x) == 1) return std::nullopt;
      return static_cast<std::int64_t>(floor_of(x));
    }
  }
  return std::nullopt;
}

bool Partition::left_of(std::int64_t a, std::int64_t b) const {
  switch (kind_) {
    case Kind::Explicit: return cell(a).lo < cell(b).lo;
    case Kind::Geometric: return a > b;
    case Kind::Lattice: return a < b;
  }
  return false;
}

std::optional<std::vector<std::int64_t>> Partition::cells_spanning(const Rational& lo, const Rational& hi) const {
  if (kind_ != Kind::Explicit) throw std::logic_error("span lookup needs an explicit partition");
  std::vector<std::int64_t> out;
  Rational cursor = lo;
  for (const auto& c : cells_) {
    if (c.hi <= lo || c.lo >= hi) continue;
    if (c.lo != cursor || c.hi > hi) return std::nullopt;
    out.push_back(c.id);
    cursor = c.hi;
  }
  if (out.empty() || cursor != hi) return std::nullopt;
  return out;
}

Rational Branch::apply(const Rational& x) const {
  Rational t = (x - domain.lo) / (domain.hi - domain.lo);
  return increasing ? Rational(image_lo + t * (image_hi - image_lo)) : Rational(image_hi - t * (image_hi - image_lo));
}

Rational Branch::inverse(const Rational& y) const {
  Rational t = increasing ? Rational((y - image_lo) / (image_hi - image_lo))
                          : Rational((image_hi - y) / (image_hi - image_lo));
  return domain.lo + t * (domain.hi - domain.lo);
}

Rational Branch::slope() const {
  Rational s = (image_hi - image_lo) / (domain.hi - domain.lo);
  return increasing ? s : Rational(-s);
}

MarkovIntervalMap::MarkovIntervalMap(std::string name, Partition partition, std::vector<ExplicitBranch> branches,
                                     std::vector<BranchRule> rules)
    : name_(std::move(name)), partition_(std::move(partition)), explicit_(std::move(branches)), rules_(std::move(rules)) {
  if (partition_.kind() == Partition::Kind::Explicit) {
    if (!rules_.empty()) throw std::invalid_argument("explicit partitions take per-cell branches, not rules");
    for (std::size_t k = 0; k < explicit_.size(); ++k) {
      const auto& b = explicit_[k];
      partition_.cell(b.cell);
      if (!explicit_index_.emplace(b.cell, k).second) throw NotMarkov(b.cell, "branch given twice");
      if (!(b.image_lo < b.image_hi)) throw NotMarkov(b.cell, "empty image");
      auto cells = partition_.cells_spanning(b.image_lo, b.image_hi);
      if (!cells)
        throw NotMarkov(b.cell, "image (" + text(b.image_lo) + ", " + text(b.image_hi) +
                                    ") is not a union of partition intervals");
      std::sort(cells->begin(), cells->end());
      explicit_images_[b.cell] = std::move(*cells);
    }
    for (const auto& c : partition_.cells())
      if (!explicit_index_.contains(c.id)) throw NotMarkov(c.id, "no branch given");
  } else {
    if (!explicit_.empty()) throw std::invalid_argument("infinite partitions take branch rules");
    if (rules_.empty()) throw std::invalid_argument("no branch rules");
    for (std::size_t a = 0; a < rules_.size(); ++a)
      for (std::size_t b = a + 1; b < rules_.size(); ++b)
        if (rules_[a].domain.overlaps(rules_[b].domain))
          throw std::invalid_argument("branch rules " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
  }
}

Branch MarkovIntervalMap::branch(std::int64_t id) const {
  Cell domain = partition_.cell(id);
  if (auto it = explicit_index_.find(id); it != explicit_index_.end()) {
    const auto& b = explicit_[it->second];
    return {domain, b.image_lo, b.image_hi, b.increasing};
  }
  for (const auto& rule : rules_) {
    if (!rule.domain.contains(id)) continue;
    IndexInterval span = IndexInterval{rule.image.lo.at(id), rule.image.hi.at(id)}.intersect(partition_.ids().range());
    if (span.empty()) throw NotMarkov(id, "empty image");
    if (partition_.kind() == Partition::Kind::Geometric) {
      Rational lo = span.hi ? power(partition_.ratio(), *span.hi) : Rational(0);
      return {domain, lo, power(partition_.ratio(), *span.lo - 1), rule.increasing};
    }
    if (!span.bounded()) throw NotMarkov(id, "unbounded image on a lattice partition");
    return {domain, Rational(*span.lo), Rational(*span.hi + 1), rule.increasing};
  }
  throw UnresolvableState(StateId(id));
}

std::vector<std::int64_t> MarkovIntervalMap::image_cells(std::int64_t id) const {
  if (auto it = explicit_images_.find(id); it != explicit_images_.end()) return it->second;
  std::vector<std::int64_t> out;
  for (const auto& rule : rules_) {
    if (!rule.domain.contains(id)) continue;
    IndexInterval span = IndexInterval{rule.image.lo.at(id), rule.image.hi.at(id)}.intersect(partition_.ids().range());
    if (!span.bounded()) throw std::domain_error("image of cell " + std::to_string(id) + " is infinite");
    for (auto j = *span.lo; j <= *span.hi; ++j) out.push_back(j);
    return out;
  }
  throw UnresolvableState(StateId(id));
}

Rational MarkovIntervalMap::apply(const Rational& x) const {
  auto id = partition_.locate(x);
  if (!id) throw HitsPartitionPoint(0);
  return branch(*id).apply(x);
}

MarkovIntervalMap tent_map() {
  auto p = Partition::explicit_cells({{0, Rational(0), Rational(1, 2)}, {1, Rational(1, 2), Rational(1)}});
  return MarkovIntervalMap("tent", p, {{0, Rational(0), Rational(1), true}, {1, Rational(0), Rational(1), false}});
}

MarkovIntervalMap bruin_todd_map(const Rational& lambda) {
  std::vector<BranchRule> rules{
      {Progression{{1, 1}, 1, 0}, SuccessorRange{Bound::absolute(1), Bound::unbounded()}, true},
      {Progression{{2, std::nullopt}, 1, 0}, SuccessorRange{Bound::relative(-1), Bound::unbounded()}, true},
  };
  return MarkovIntervalMap("bruin-todd", Partition::geometric(lambda), {}, std::move(rules));
}

MarkovIntervalMap five_three_map() {
  std::vector<BranchRule> rules{
      {Progression{{}, 2, 0}, SuccessorRange{Bound::relative(-2), Bound::relative(2)}, true},
      {Progression{{}, 2, 1}, SuccessorRange{Bound::relative(-1), Bound::relative(1)}, false},
  };
  return MarkovIntervalMap("five-three", Partition::lattice(), {}, std::move(rules));
}

MarkovIntervalMap builtin_interval_map(const std::string& name) {
  if (name == "tent") return tent_map();
  if (name == "bruin-todd") return bruin_todd_map();
  if (name == "five-three") return five_three_map();
  throw std::invalid_argument("unknown builtin interval map '" + name + "'");
}

RuleSetPtr transition_matrix(const MarkovIntervalMap& f) {
  const auto& p = f.partition();
  std::map<StateId, std::vector<StateId>> rows;
  std::vector<TailRule> rules;
  if (p.kind() == Partition::Kind::Explicit) {
    for (const auto& c : p.cells()) {
      auto& row = rows[StateId(c.id)];
      for (auto j : f.image_cells(c.id)) row.emplace_back(j);
    }
  } else {
    for (const auto& r : f.rules()) rules.push_back({r.domain, {r.image}});
  }
  return std::make_shared<TransitionRuleSet>(f.name(), p.ids(), std::move(rows), std::move(rules));
}

namespace {

bool covers(const MarkovIntervalMap& f, std::int64_t i, std::int64_t j) {
  if (f.partition().kind() == Partition::Kind::Explicit) {
    auto img = f.image_cells(i);
    return std::binary_search(img.begin(), img.end(), j);
  }
  Branch b = f.branch(i);
  Cell c = f.partition().cell(j);
  return c.lo >= b.image_lo && c.hi <= b.image_hi;
}

std::pair<Rational, Rational> ordered(Rational a, Rational b) {
  if (b < a) std::swap(a, b);
  return {a, b};
}

}  // namespace

Itinerary itinerary(const MarkovIntervalMap& f, const Rational& x0, std::size_t n) {
  Itinerary out;
  Rational x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    auto id = f.partition().locate(x);
    if (!id) throw HitsPartitionPoint(k);
    out.push_back(*id);
    if (k + 1 < n) x = f.branch(*id).apply(x);
  }
  return out;
}

CylinderInterval cylinder_interval(const MarkovIntervalMap& f, const Itinerary& word) {
  if (word.empty()) throw InadmissibleWord("empty word");
  for (auto id : word)
    if (!f.partition().ids().contains(StateId(id))) throw InadmissibleWord("unknown symbol " + std::to_string(id));
  for (std::size_t k = 0; k + 1 < word.size(); ++k)
    if (!covers(f, word[k], word[k + 1]))
      throw InadmissibleWord("transition " + std::to_string(word[k]) + " -> " + std::to_string(word[k + 1]) +
                             " is not allowed");
  Cell last = f.partition().cell(word.back());
  Rational lo = last.lo, hi = last.hi;
  for (std::size_t k = word.size() - 1; k-- > 0;) {
    Branch b = f.branch(word[k]);
    std::tie(lo, hi) = ordered(b.inverse(lo), b.inverse(hi));
  }
  CylinderInterval c{word, lo, hi, false};
  Rational a = lo, z = hi;
  for (std::size_t k = 0; k + 1 < word.size(); ++k) {
    Branch b = f.branch(word[k]);
    std::tie(a, z) = ordered(b.apply(a), b.apply(z));
  }
  c.image_verified = a == last.lo && z == last.hi;
  return c;
}

PointEnclosure point_from_itinerary(const MarkovIntervalMap& f, const Itinerary& word, double eps) {
  auto c = cylinder_interval(f, word);
  return {c.lo, c.hi, to_double(Rational(c.hi - c.lo)) < eps};
}

PointEnclosure image_of_enclosure(const MarkovIntervalMap& f, std::int64_t cell, const PointEnclosure& e) {
  Branch b = f.branch(cell);
  auto [lo, hi] = ordered(b.apply(e.lo), b.apply(e.hi));
  return {lo, hi, e.converged};
}

std::optional<Rational> PiecewiseAffineMap::to_unit_exact(const Rational& t) const {
  if (!scale || offset != 0.0) return std::nullopt;
  return t / *scale;
}

PiecewiseAffineMap lebesgue_fair_model(const MarkovIntervalMap& f, const FairMeasure& mu, std::size_t window) {
  const auto& part = f.partition();
  auto m = transition_matrix(f);

  auto weight = [&](std::int64_t id) -> Rational {
    if (mu.exact) return mu.exact->weights.weight(StateId(id));
    return Rational(mu.pi.at(StateId(id)));
  };
  std::vector<std::int64_t> cells;
  std::map<std::int64_t, Rational> w;
  for (auto id : part.window(window)) {
    Rational v = weight(id);
    if (v > 0) {
      cells.push_back(id);
      w[id] = v;
    }
  }
  std::sort(cells.begin(), cells.end(), [&](auto a, auto b) { return part.left_of(a, b); });
  std::set<std::int64_t> emitted(cells.begin(), cells.end());
  IndexInterval span{*std::min_element(cells.begin(), cells.end()), *std::max_element(cells.begin(), cells.end())};

  PiecewiseAffineMap g;
  std::map<std::int64_t, Rational> start;
  Rational cursor = 0;
  for (auto id : cells) {
    start[id] = cursor;
    cursor += w[id];
  }
  const Rational emitted_mass = cursor;
  const bool finite_complete = part.kind() == Partition::Kind::Explicit && cells.size() == part.cells().size();
  if (mu.exact && mu.exact->weights.total) {
    g.scale = *mu.exact->weights.total;
    g.scale_approx = to_double(*g.scale);
  } else if (finite_complete) {
    g.scale = emitted_mass;
    g.scale_approx = to_double(emitted_mass);
  } else {
    g.scale_approx = mu.exact ? mu.exact->weights.total_approx : 1.0;
  }
  if (part.kind() == Partition::Kind::Geometric) g.offset = std::max(0.0, g.scale_approx - to_double(emitted_mass));

  std::map<std::int64_t, std::uint64_t> c;
  auto count = [&](std::int64_t j) {
    auto [it, fresh] = c.try_emplace(j, 0);
    if (fresh) it->second = m->column_count(StateId(j)).value();
    return it->second;
  };

  for (auto i : cells) {
    Branch b = f.branch(i);
    RowSupport row = m->row(StateId(i));
    std::vector<std::int64_t> succ, missing;
    for (StateId j : row.finite() ? row.states() : row.states_within(span))
      (emitted.contains(j.index) ? succ : missing).push_back(j.index);
    bool tail_left = false, tail_right = false;
    if (!row.finite()) (part.kind() == Partition::Kind::Geometric ? tail_left : tail_right) = true;
    std::sort(succ.begin(), succ.end(), [&](auto a, auto z) { return part.left_of(a, z); });
    for (auto u : missing) {
      if (succ.empty() || part.left_of(u, succ.front())) tail_left = true;
      else if (part.left_of(succ.back(), u)) tail_right = true;
      else throw std::invalid_argument("cell " + std::to_string(i) + " misses an interior image cell");
    }
    if (tail_left && tail_right) throw std::invalid_argument("cell " + std::to_string(i) + " is cut on both sides");
    if (!b.increasing) std::reverse(succ.begin(), succ.end());

    Rational used = 0;
    for (auto j : succ) used += w[j] / Rational(static_cast<long long>(count(j)));
    Rational gap = w[i] - used;
    if (gap < 0) {
      g.layout_defect += to_double(Rational(-gap));
      gap = 0;
    } else if (gap > 0 && !tail_left && !tail_right) {
      g.layout_defect += to_double(gap);
    }
    // Unemitted image cells on the left pull back to the left end of an
    // increasing branch and to the right end of a decreasing one.
    const bool gap_first = (tail_left && b.increasing) || (tail_right && !b.increasing);
    Rational x = start[i] + (gap_first ? gap : Rational(0));
    for (auto j : succ) {
      const auto cj = static_cast<long long>(count(j));
      Rational len = w[j] / Rational(cj);
      AffinePiece piece{i, j, x, x + len, start[j], start[j] + w[j], Rational(0)};
      Rational slope = (piece.y_hi - piece.y_lo) / (piece.x_hi - piece.x_lo);
      if (slope != Rational(cj)) throw std::logic_error("fair model slope differs from the preimage count");
      piece.slope = b.increasing ? slope : Rational(-slope);
      g.pieces.push_back(piece);
      x += len;
    }
  }
  std::sort(g.pieces.begin(), g.pieces.end(), [](const auto& a, const auto& b) { return a.x_lo < b.x_lo; });

  for (auto j : cells) {
    ImageCell img{j, start[j], start[j] + w[j], count(j), true};
    for (StateId i : m->predecessors(StateId(j)))
      if (!emitted.contains(i.index)) img.complete = false;
    g.images.push_back(img);
  }

  Rational covered = 0;
  for (const auto& p : g.pieces) covered += p.x_hi - p.x_lo;
  g.tail_mass = std::max(0.0, 1.0 - to_double(covered) / g.scale_approx);
  return g;
}

PiecewiseAffineMap split_pieces(const PiecewiseAffineMap& g, int k) {
  if (k < 1) throw std::invalid_argument("split factor must be positive");
  PiecewiseAffineMap out = g;
  out.pieces.clear();
  for (const auto& p : g.pieces) {
    Rational len = (p.x_hi - p.x_lo) / k;
    for (int s = 0; s < k; ++s) {
      AffinePiece q = p;
      q.x_lo = p.x_lo + len * s;
      q.x_hi = q.x_lo + len;
      q.slope = p.slope * k * (s % 2 == 0 ? 1 : -1);
      out.pieces.push_back(q);
    }
  }
  for (auto& img : out.images) img.expected_c *= static_cast<std::uint64_t>(k);
  return out;
}

std::vector<AffinePiece> merge_collinear(const PiecewiseAffineMap& g) {
  std::vector<AffinePiece> out;
  for (const auto& p : g.pieces) {
    if (!out.empty()) {
      auto& q = out.back();
      bool joins = q.x_hi == p.x_lo && q.slope == p.slope &&
                   (p.slope > 0 ? q.y_hi == p.y_lo : q.y_lo == p.y_hi);
      if (joins) {
        q.x_hi = p.x_hi;
        q.y_lo = std::min(q.y_lo, p.y_lo);
        q.y_hi = std::max(q.y_hi, p.y_hi);
        continue;
      }
    }
    out.push_back(p);
  }
  return out;
}

EntropyEstimate rohlin_entropy(const PiecewiseAffineMap& g) {
  EntropyEstimate e;
  double steepest = 0.0;
  for (const auto& p : g.pieces) {
    double s = std::abs(to_double(p.slope));
    e.value += to_double(Rational(p.x_hi - p.x_lo)) / g.scale_approx * std::log(s);
    steepest = std::max(steepest, s);
  }
  // Uncovered mass weighted by the steepest emitted slope (heuristic).
  e.tail_estimate = steepest > 1.0 ? g.tail_mass * std::log(steepest) : 0.0;
  return e;
}

LebesgueFairCheck check_lebesgue_fair(const PiecewiseAffineMap& g, std::size_t depth) {
  if (depth == 0) throw std::invalid_argument("depth must be at least 1");
  std::map<std::int64_t, const ImageCell*> images;
  for (const auto& img : g.images) images[img.cell] = &img;
  std::map<std::int64_t, std::vector<const AffinePiece*>> onto;
  std::map<std::pair<std::int64_t, std::int64_t>, const AffinePiece*> by_pair;
  for (const auto& p : g.pieces) {
    onto[p.image_cell].push_back(&p);
    by_pair[{p.domain_cell, p.image_cell}] = &p;
  }
  auto pull_back = [](const AffinePiece& p, const Rational& lo, const Rational& hi) {
    auto inv = [&](const Rational& y) {
      return p.slope > 0 ? Rational(p.x_lo + (y - p.y_lo) / p.slope) : Rational(p.x_lo + (y - p.y_hi) / p.slope);
    };
    return ordered(inv(lo), inv(hi));
  };

  LebesgueFairCheck out;
  std::vector<std::int64_t> word;
  auto visit = [&](auto&& self) -> void {
    // B = [word]: pull the last cell back along the word.
    const ImageCell* last = images.at(word.back());
    Rational lo = last->lo, hi = last->hi;
    for (std::size_t k = word.size() - 1; k-- > 0;) std::tie(lo, hi) = pull_back(*by_pair.at({word[k], word[k + 1]}), lo, hi);
    const auto& branches = onto[word.front()];
    if (!branches.empty()) {
      ++out.cylinders_checked;
      Rational share = (hi - lo) / Rational(static_cast<long long>(branches.size()));
      for (const auto* p : branches) {
        auto [a, z] = pull_back(*p, lo, hi);
        Rational v = abs(Rational((z - a) - share));
        if (v > out.exact_mass_violation) out.exact_mass_violation = v;
      }
    }
    if (word.size() == depth) return;
    for (const auto& p : g.pieces)
      if (p.domain_cell == word.back() && images.contains(p.image_cell)) {
        word.push_back(p.image_cell);
        self(self);
        word.pop_back();
      }
  };
  for (const auto& img : g.images) {
    if (!img.complete) continue;
    word.assign(1, img.cell);
    visit(visit);
  }
  out.max_violation = g.scale ? to_double(Rational(out.exact_mass_violation / *g.scale))
                              : to_double(out.exact_mass_violation) / g.scale_approx;
  return out;
}

}  // namespace fairmeasure
