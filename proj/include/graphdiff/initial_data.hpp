#ifndef GRAPHDIFF_INITIAL_DATA_HPP
#define GRAPHDIFF_INITIAL_DATA_HPP

#include <string>
#include <vector>

#include "graphdiff/grid.hpp"

namespace graphdiff {

enum class DatumKind { bump, gaussian, indicator };

DatumKind parse_datum_kind(const std::string& name);
std::string to_string(DatumKind k);

/// One localized datum on an edge, scaled to the requested discrete mass.
///   bump:      raised cosine (1 + cos(pi (x-c)/w)) / 2 on |x - c| < w
///   gaussian:  exp(-(x-c)^2 / (2 w^2))
///   indicator: 1 on [c - w, c + w], exact cell overlap
struct DatumSpec {
  DatumKind kind = DatumKind::bump;
  EdgeId edge;
  double center = 1.0;
  double width = 0.5;
  double mass = 1.0;
};

GraphFunction make_datum(std::shared_ptr<const Grid> grid, const DatumSpec& spec);

/// Sum of several data.
GraphFunction make_datum(std::shared_ptr<const Grid> grid, const std::vector<DatumSpec>& specs);

}  // namespace graphdiff

#endif  // GRAPHDIFF_INITIAL_DATA_HPP
