#include <doctest.h>

#include <random>

#include "graphdiff/graph.hpp"
#include "oracles.hpp"

using namespace graphdiff;

namespace {

GraphDescription tadpole() {
  GraphDescription d;
  d.vertices = {"v0", "v1"};
  d.edges = {{"v0", "v1", 1.0}, {"v0", "v1", 2.0}, {"v0", "v1", 2.0}, {"v1", std::nullopt, kInfiniteLength}};
  return d;
}

GraphDescription two_parallel(double a, double b) {
  GraphDescription d;
  d.vertices = {"v0", "v1"};
  d.edges = {{"v0", "v1", a}, {"v0", "v1", b}, {"v1", std::nullopt, kInfiniteLength}};
  return d;
}

}  // namespace

TEST_CASE("3-star has three rays and an empty core") {
  const MetricGraph g = build_graph(star_graph(3));
  CHECK(g.vertex_count() == 1);
  CHECK(g.infinite_edges().size() == 3);
  CHECK(g.finite_edges().empty());
  CHECK(g.degree(VertexId{0}) == 3);
  CHECK(g.warnings().empty());
}

TEST_CASE("tadpole with parallel edges builds and warns outside strict mode") {
  const MetricGraph g = build_graph(tadpole());
  CHECK(g.infinite_edges().size() == 1);
  CHECK(g.finite_edges().size() == 3);
  CHECK(g.finite_length() == doctest::Approx(5.0));
  CHECK(g.warnings().empty());  // degrees are 3 and 4
}

TEST_CASE("build_graph rejects invalid descriptions") {
  GraphDescription d;
  d.vertices = {"a", "b"};
  d.edges = {{"a", "b", 1.0}};
  CHECK_THROWS_WITH_AS(build_graph(d), doctest::Contains("infinite edge"), std::invalid_argument);
  d.allow_compact = true;
  CHECK_NOTHROW(build_graph(d));

  GraphDescription disc = star_graph(1);
  disc.vertices.push_back("lonely");
  CHECK_THROWS_WITH_AS(build_graph(disc), doctest::Contains("disconnected"), std::invalid_argument);

  GraphDescription neg = star_graph(2);
  neg.vertices.push_back("b");
  neg.edges.push_back({"o", "b", -1.0});
  CHECK_THROWS_WITH_AS(build_graph(neg), doctest::Contains("nonpositive"), std::invalid_argument);
  neg.edges.back().length = 0.0;
  CHECK_THROWS_AS(build_graph(neg), std::invalid_argument);

  GraphDescription twoends = star_graph(1);
  twoends.edges.push_back({"o", "o", kInfiniteLength});
  CHECK_THROWS_WITH_AS(build_graph(twoends), doctest::Contains("two endpoints"), std::invalid_argument);

  GraphDescription unknown = star_graph(1);
  unknown.edges.push_back({"o", "x", 1.0});
  CHECK_THROWS_WITH_AS(build_graph(unknown), doctest::Contains("unknown vertex"), std::invalid_argument);

  GraphDescription dup = star_graph(1);
  dup.vertices.push_back("o");
  CHECK_THROWS_AS(build_graph(dup), std::invalid_argument);
}

TEST_CASE("strict topology rejects low-degree vertices, lax mode warns") {
  GraphDescription d = star_graph(2);
  CHECK(build_graph(d).warnings().size() == 1);
  d.strict_topology = true;
  CHECK_THROWS_WITH_AS(build_graph(d), doctest::Contains("degree 2"), std::invalid_argument);
  CHECK_NOTHROW(build_graph(mixed_graph()));
}

TEST_CASE("vertex distances: parallel minimum and path additivity") {
  CHECK(build_graph(two_parallel(1.0, 3.0)).vertex_distances()(0, 1) == 1.0);
  GraphDescription p;
  p.vertices = {"v0", "v1", "v2"};
  p.edges = {{"v0", "v1", 1.0}, {"v1", "v2", 2.0}, {"v2", std::nullopt, kInfiniteLength}};
  CHECK(build_graph(p).vertex_distances()(0, 2) == 3.0);
}

TEST_CASE("vertex distances match exhaustive simple-path enumeration") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const MetricGraph g = build_graph(oracle::random_graph(rng, 10, 16));
    const auto brute = oracle::brute_force_vertex_distances(g);
    for (std::size_t i = 0; i < g.vertex_count(); ++i)
      for (std::size_t j = 0; j < g.vertex_count(); ++j)
        CHECK(g.vertex_distances()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
              doctest::Approx(brute[i][j]).epsilon(1e-13));
  }
}

TEST_CASE("graph_distance examples") {
  GraphDescription seg;
  seg.vertices = {"a", "b"};
  seg.edges = {{"a", "b", 1.0}, {"b", std::nullopt, kInfiniteLength}};
  const MetricGraph s = build_graph(seg);
  CHECK(graph_distance(s, {EdgeId{0}, 0.2}, {EdgeId{0}, 0.7}) == doctest::Approx(0.5));

  const MetricGraph star = build_graph(star_graph(3));
  CHECK(graph_distance(star, {EdgeId{1}, 0.3}, {EdgeId{2}, 0.4}) == doctest::Approx(0.7));

  const MetricGraph par = build_graph(two_parallel(3.0, 1.0));
  CHECK(graph_distance(par, {EdgeId{0}, 2.9}, {EdgeId{0}, 0.1}) == doctest::Approx(1.2));

  // Self-loop: both ends are the same vertex.
  const MetricGraph mixed = build_graph(mixed_graph());
  CHECK(graph_distance(mixed, {EdgeId{2}, 0.1}, {EdgeId{2}, 1.4}) == doctest::Approx(0.2));
  CHECK(graph_distance(mixed, {EdgeId{3}, 2.0}, {EdgeId{4}, 3.0}) == doctest::Approx(6.0));

  CHECK_THROWS_AS(graph_distance(s, {EdgeId{0}, 1.5}, {EdgeId{0}, 0.0}), std::invalid_argument);
}

TEST_CASE("graph_distance agrees with refined-grid Dijkstra") {
  std::mt19937_64 rng(7);
  for (int gi = 0; gi < 5; ++gi) {
    const MetricGraph g = build_graph(oracle::random_graph(rng, 4, 8));
    for (int k = 0; k < 10; ++k) {
      const GraphPoint x = oracle::random_point(g, rng, 5.0);
      const GraphPoint y = oracle::random_point(g, rng, 5.0);
      CHECK(graph_distance(g, x, y) == doctest::Approx(oracle::refined_dijkstra(g, x, y, 1e-3, 5.0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("property: symmetry, identity and triangle inequality") {
  std::mt19937_64 rng(11);
  for (int gi = 0; gi < 20; ++gi) {
    const MetricGraph g = build_graph(oracle::random_graph(rng, 5, 8));
    for (int k = 0; k < 30; ++k) {
      const GraphPoint x = oracle::random_point(g, rng, 5.0);
      const GraphPoint y = oracle::random_point(g, rng, 5.0);
      const GraphPoint z = oracle::random_point(g, rng, 5.0);
      CHECK(graph_distance(g, x, y) == graph_distance(g, y, x));
      CHECK(graph_distance(g, x, x) == 0.0);
      CHECK(graph_distance(g, x, y) <= graph_distance(g, x, z) + graph_distance(g, z, y) + 1e-12);
    }
  }
}

TEST_CASE("rescale_graph divides finite lengths only") {
  const MetricGraph g = build_graph(two_parallel(3.0, 1.0));
  const MetricGraph h = rescale_graph(g, 2.0);
  CHECK(h.edge(EdgeId{0}).length == 1.5);
  CHECK(h.edge(EdgeId{1}).length == 0.5);
  CHECK(std::isinf(h.edge(EdgeId{2}).length));
  CHECK(h.vertex_distances()(0, 1) == 0.5);
  CHECK(is_rescaling_of(h, g, 2.0));
  CHECK_FALSE(is_rescaling_of(h, g, 3.0));
  const MetricGraph id = rescale_graph(g, 1.0);
  CHECK(is_rescaling_of(id, g, 1.0));
  CHECK(rescale_graph(g, 1e9).edge(EdgeId{0}).length < 1e-8);
  CHECK_THROWS_AS(rescale_graph(g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rescale_graph(g, -1.0), std::invalid_argument);
}
