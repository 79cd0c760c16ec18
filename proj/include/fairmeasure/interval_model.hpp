#pragma once

// Countably Markov interval maps with affine branches, their symbolic
// dynamics, and the Lebesgue fair model (a piecewise affine conjugate with
// |slope| = c_j on the preimage pieces of interval j).

#include "fairmeasure/fair_measure.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fairmeasure {

/// Open interval (lo, hi).
struct Cell {
  std::int64_t id = 0;
  Rational lo;
  Rational hi;
};

class Partition {
 public:
  enum class Kind { Explicit, Geometric, Lattice };

  /// Finite list of disjoint open cells with ids min..max (gaps allowed).
  static Partition explicit_cells(std::vector<Cell> cells);
  /// Cells (ratio^n, ratio^(n-1)), n >= 1, accumulating at 0.
  static Partition geometric(Rational ratio);
  /// Cells (k, k+1), k in Z.
  static Partition lattice();

  Kind kind() const { return kind_; }
  const Rational& ratio() const { return ratio_; }
  const std::vector<Cell>& cells() const { return cells_; }  // explicit only, sorted by position
  StateSpace ids() const;
  /// The first n ids in canonical state order.
  std::vector<std::int64_t> window(std::size_t n) const;

  Cell cell(std::int64_t id) const;
  /// Id of the open cell containing x, or nullopt for partition points and
  /// points outside every cell.
  std::optional<std::int64_t> locate(const Rational& x) const;
  /// Whether a lies to the left of b.
  bool left_of(std::int64_t a, std::int64_t b) const;
  /// Cells the contiguous span (lo, hi) is made of, or nullopt when the span
  /// is not a union of cells up to finitely many points.
  std::optional<std::vector<std::int64_t>> cells_spanning(const Rational& lo, const Rational& hi) const;

 private:
  Kind kind_ = Kind::Explicit;
  Rational ratio_;
  std::vector<Cell> cells_;
};

/// Image of the branch on one explicit cell, with exact endpoints.
struct ExplicitBranch {
  std::int64_t cell = 0;
  Rational image_lo;
  Rational image_hi;
  bool increasing = true;
};

/// Branches on a progression of cells of an infinite partition; the image is
/// the union of the cells in `image` (id range evaluated at the source id).
struct BranchRule {
  Progression domain;
  SuccessorRange image;
  bool increasing = true;
};

class NotMarkov : public std::invalid_argument {
 public:
  NotMarkov(std::int64_t cell, const std::string& what);
  std::int64_t cell;
};

class HitsPartitionPoint : public std::domain_error {
 public:
  explicit HitsPartitionPoint(std::size_t k);
  std::size_t time;  // first k with f^k(x) outside every open cell
};

class InadmissibleWord : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Branch {
  Cell domain;
  Rational image_lo;
  Rational image_hi;
  bool increasing = true;

  Rational apply(const Rational& x) const;
  Rational inverse(const Rational& y) const;
  Rational slope() const;  // signed
};

class MarkovIntervalMap {
 public:
  MarkovIntervalMap(std::string name, Partition partition, std::vector<ExplicitBranch> branches,
                    std::vector<BranchRule> rules = {});

  const std::string& name() const { return name_; }
  const Partition& partition() const { return partition_; }
  const std::vector<ExplicitBranch>& explicit_branches() const { return explicit_; }
  const std::vector<BranchRule>& rules() const { return rules_; }

  Branch branch(std::int64_t cell) const;
  /// Ids of the cells covered by the image of `cell` (finite rows only).
  std::vector<std::int64_t> image_cells(std::int64_t cell) const;
  Rational apply(const Rational& x) const;  // x must lie in an open cell

 private:
  std::string name_;
  Partition partition_;
  std::vector<ExplicitBranch> explicit_;
  std::map<std::int64_t, std::size_t> explicit_index_;
  std::map<std::int64_t, std::vector<std::int64_t>> explicit_images_;
  std::vector<BranchRule> rules_;
};

MarkovIntervalMap tent_map();
MarkovIntervalMap bruin_todd_map(const Rational& lambda = Rational(1, 2));
MarkovIntervalMap five_three_map();
MarkovIntervalMap builtin_interval_map(const std::string& name);

RuleSetPtr transition_matrix(const MarkovIntervalMap& f);

using Itinerary = std::vector<std::int64_t>;

/// i_0 ... i_{n-1} with f^k(x) in i_k.
Itinerary itinerary(const MarkovIntervalMap& f, const Rational& x, std::size_t n);

struct CylinderInterval {
  Itinerary word;
  Rational lo;
  Rational hi;
  bool image_verified = false;  // f^(n-1) maps (lo, hi) onto the last cell
};

CylinderInterval cylinder_interval(const MarkovIntervalMap& f, const Itinerary& word);

struct PointEnclosure {
  Rational lo;  // closed interval [lo, hi]
  Rational hi;
  bool converged = false;  // width below eps
};

PointEnclosure point_from_itinerary(const MarkovIntervalMap& f, const Itinerary& word, double eps);

/// Image of a closed enclosure inside the closure of one cell.
PointEnclosure image_of_enclosure(const MarkovIntervalMap& f, std::int64_t cell, const PointEnclosure& e);

struct AffinePiece {
  std::int64_t domain_cell = 0;
  std::int64_t image_cell = 0;
  Rational x_lo, x_hi;  // mass coordinates
  Rational y_lo, y_hi;
  Rational slope;  // signed
};

struct ImageCell {
  std::int64_t cell = 0;
  Rational lo, hi;  // mass coordinates
  std::uint64_t expected_c = 0;
  bool complete = false;  // every preimage piece was emitted
};

/// Piecewise affine map in mass coordinates t; the point of [0,1] is
/// (offset + t) / scale.
struct PiecewiseAffineMap {
  std::vector<AffinePiece> pieces;  // sorted by x_lo
  std::vector<ImageCell> images;    // sorted by lo
  std::optional<Rational> scale;    // when the total mass is rational
  double scale_approx = 1.0;
  double offset = 0.0;      // mass to the left of the emitted region
  double tail_mass = 0.0;   // probability not covered by emitted pieces
  double layout_defect = 0.0;

  double to_unit(const Rational& t) const { return (offset + to_double(t)) / scale_approx; }
  /// Exact unit coordinate when the scale is rational and nothing is cut off on the left.
  std::optional<Rational> to_unit_exact(const Rational& t) const;
};

PiecewiseAffineMap lebesgue_fair_model(const MarkovIntervalMap& f, const FairMeasure& mu, std::size_t window);

/// Replaces every piece by k consecutive pieces of k times the slope, each
/// onto the whole image of the original piece, alternating orientation.
PiecewiseAffineMap split_pieces(const PiecewiseAffineMap& g, int k);

/// Adjacent pieces joined when they continue the same affine map.
std::vector<AffinePiece> merge_collinear(const PiecewiseAffineMap& g);

EntropyEstimate rohlin_entropy(const PiecewiseAffineMap& g);

struct LebesgueFairCheck {
  double max_violation = 0.0;  // probability units
  Rational exact_mass_violation;  // same quantity in mass coordinates, exact
  std::size_t cylinders_checked = 0;
};

/// Fairness of Lebesgue measure for g on refined cylinders of depth <= depth
/// over images whose preimage pieces were all emitted.
LebesgueFairCheck check_lebesgue_fair(const PiecewiseAffineMap& g, std::size_t depth);

}  // namespace fairmeasure
