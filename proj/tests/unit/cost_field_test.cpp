#include "steam_mapf/cost_field.hpp"
#include "steam_mapf/error.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace steam_mapf;

namespace {

WeightField weighted(const GridMap& m, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> w(m.cell_count());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = m.blocked_at(i) ? kInfinity : u(rng);
    }
    return WeightField(m, std::move(w));
}

std::vector<double> values(const WeightField& w) { return {w.values().begin(), w.values().end()}; }

// 3x3 open grid with weight 5 at the center.
WeightField center_five(const GridMap& m) {
    WeightField w = WeightField::uniform(m);
    w.add({1, 1}, 4.0);
    return w;
}

} // namespace

TEST(CostField, Examples) {
    const GridMap m = GridMap::empty(3, 3);
    const CostField f = compute_cost_field(m, WeightField::uniform(m), {2, 2});
    EXPECT_EQ(f.at({0, 0}), 4.0);
    EXPECT_EQ(f.at({2, 2}), 0.0);

    const WeightField w = center_five(m);
    const CostField g = compute_cost_field(m, w, {1, 2});
    EXPECT_EQ(g.at({1, 0}), 4.0);
    for (Vertex v : oracle::free_cells(m)) {
        EXPECT_EQ(g.at(v), oracle::min_simple_path_cost(m, values(w), v, {1, 2})) << to_string(v);
    }
}

TEST(CostField, TargetBlocked) {
    const std::string rows[] = {".@"};
    const GridMap m = GridMap::from_rows(rows);
    try {
        compute_cost_field(m, WeightField::uniform(m), {0, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TargetBlocked);
    }
}

TEST(CostField, UnreachableIsInfinite) {
    const std::string rows[] = {"..@.", "..@."};
    const GridMap m = GridMap::from_rows(rows);
    const CostField f = compute_cost_field(m, WeightField::uniform(m), {0, 0});
    EXPECT_EQ(f.at({0, 3}), kInfinity);
    EXPECT_FALSE(f.reachable({1, 3}));
    EXPECT_EQ(f.at({1, 1}), 2.0);
}

TEST(CostField, MatchesBfsOnUnitWeights) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 100; ++k) {
        const GridMap m = oracle::random_map(12, 10, 0.3, rng);
        const auto cells = oracle::free_cells(m);
        if (cells.empty()) continue;
        const Vertex t = cells[rng() % cells.size()];
        const CostField f = compute_cost_field(m, WeightField::uniform(m), t);
        const auto hops = oracle::bfs_hops(m, t);
        for (Vertex v : cells) {
            const int h = hops[m.index(v)];
            ASSERT_EQ(f.at(v), h < 0 ? kInfinity : static_cast<double>(h));
        }
    }
}

TEST(CostField, MatchesReferenceDijkstraOnWeights) {
    std::mt19937_64 rng(22);
    for (int k = 0; k < 60; ++k) {
        const GridMap m = oracle::random_map(9, 9, 0.25, rng);
        const auto cells = oracle::free_cells(m);
        if (cells.empty()) continue;
        // Alternate real weights and small integer weights, which take
        // different search paths in the library.
        WeightField w = weighted(m, rng, 0.5, 4.0);
        if (k % 2) {
            std::vector<double> ints = values(w);
            for (double& x : ints) {
                if (x < kInfinity) x = std::floor(x * 3.0);
                if (x == 0.0) x = 1.0;
            }
            w = WeightField(m, ints);
        }
        const Vertex t = cells[rng() % cells.size()];
        const CostField f = compute_cost_field(m, w, t);
        const auto ref = oracle::slow_costs(m, values(w), t);
        for (Vertex v : cells) {
            if (ref[m.index(v)] == kInfinity) {
                ASSERT_EQ(f.at(v), kInfinity);
            } else {
                ASSERT_NEAR(f.at(v), ref[m.index(v)], 1e-9);
            }
        }
    }
}

TEST(CostField, MonotoneInWeights) {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 40; ++k) {
        const GridMap m = oracle::random_map(8, 8, 0.2, rng);
        const auto cells = oracle::free_cells(m);
        if (cells.size() < 2) continue;
        const WeightField w = weighted(m, rng, 0.5, 2.0);
        const Vertex t = cells[rng() % cells.size()];
        WeightField raised = w;
        raised.add(cells[rng() % cells.size()], 3.0);
        const CostField a = compute_cost_field(m, w, t), b = compute_cost_field(m, raised, t);
        for (Vertex v : cells) {
            ASSERT_GE(b.at(v), a.at(v));
        }
    }
}

TEST(ExtractPath, Examples) {
    const GridMap corridor = GridMap::empty(5, 1);
    const WeightField u = WeightField::uniform(corridor);
    const PathPlan p = extract_path(compute_cost_field(corridor, u, {0, 4}), u, {0, 0});
    EXPECT_EQ(p.vertices, (std::vector<Vertex>{{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}}));
    EXPECT_EQ(p.at(99), (Vertex{0, 4}));

    const PathPlan self = extract_path(compute_cost_field(corridor, u, {0, 4}), u, {0, 4});
    EXPECT_EQ(self.vertices, (std::vector<Vertex>{{0, 4}}));

    const GridMap open = GridMap::empty(3, 3);
    const WeightField uo = WeightField::uniform(open);
    const PathPlan straight = extract_path(compute_cost_field(open, uo, {1, 2}), uo, {1, 0});
    EXPECT_EQ(straight.vertices, (std::vector<Vertex>{{1, 0}, {1, 1}, {1, 2}}));

    // Weight 5 at the center: the detour goes over the top row (Up first).
    const WeightField w = center_five(open);
    const PathPlan around = extract_path(compute_cost_field(open, w, {1, 2}), w, {1, 0});
    EXPECT_EQ(around.vertices, (std::vector<Vertex>{{1, 0}, {0, 0}, {0, 1}, {0, 2}, {1, 2}}));
}

TEST(ExtractPath, Unreachable) {
    const std::string rows[] = {".@."};
    const GridMap m = GridMap::from_rows(rows);
    const WeightField u = WeightField::uniform(m);
    try {
        extract_path(compute_cost_field(m, u, {0, 2}), u, {0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Unreachable);
    }
}

TEST(ExtractPath, CostEqualsFieldAndStepsAreAdjacent) {
    std::mt19937_64 rng(24);
    for (int k = 0; k < 80; ++k) {
        const GridMap m = oracle::random_map(10, 10, 0.25, rng);
        const auto cells = oracle::free_cells(m);
        if (cells.size() < 2) continue;
        const WeightField w = weighted(m, rng, 0.5, 4.0);
        const Vertex t = cells[rng() % cells.size()];
        const CostField f = compute_cost_field(m, w, t);
        for (int q = 0; q < 5; ++q) {
            const Vertex s = cells[rng() % cells.size()];
            if (!f.reachable(s)) continue;
            const PathPlan p = extract_path(f, w, s);
            ASSERT_EQ(p.vertices.front(), s);
            ASSERT_EQ(p.vertices.back(), t);
            for (std::size_t h = 1; h < p.vertices.size(); ++h) {
                const Vertex a = p.vertices[h - 1], b = p.vertices[h];
                ASSERT_EQ(std::abs(a.row - b.row) + std::abs(a.col - b.col), 1);
            }
            ASSERT_NEAR(path_cost(p, w), f.at(s), 1e-9);
            ASSERT_EQ(extract_path(f, w, s).vertices, p.vertices);
        }
    }
}

TEST(LocalChannel, Examples) {
    const GridMap corridor = GridMap::empty(5, 1);
    const CostField f = compute_cost_field(corridor, WeightField::uniform(corridor), {0, 4});
    const auto ch = local_channel(f, {0, 2}, 3);
    EXPECT_EQ(ch.at(0, -1), 1.0);
    EXPECT_EQ(ch.at(0, 0), 0.0);
    EXPECT_EQ(ch.at(0, 1), -1.0);
    for (int dc = -1; dc <= 1; ++dc) {
        EXPECT_EQ(ch.at(-1, dc), kInfinity);
        EXPECT_EQ(ch.at(1, dc), kInfinity);
    }

    const std::string rows[] = {"...", ".@.", "..."};
    const GridMap m = GridMap::from_rows(rows);
    const CostField g = compute_cost_field(m, WeightField::uniform(m), {2, 2});
    const auto around = local_channel(g, {0, 1}, 5);
    EXPECT_EQ(around.at(0, 0), 0.0);
    EXPECT_EQ(around.at(1, 0), kInfinity);
    EXPECT_EQ(around.at(-1, 0), kInfinity);
}

TEST(LocalChannel, WeightedSeesNeighbourPenalty) {
    const GridMap m = GridMap::empty(3, 3);
    std::vector<double> v(9, 1.0);
    v[m.index({1, 1})] = 5.0;
    const WeightField w(m, v);
    const CostField f = compute_cost_field(m, w, {1, 2});
    // Entering (1,1) from (1,0) costs 5 + 1 against 1 + 3 around the top.
    const auto ch = local_channel(f, w, {1, 0}, 3);
    EXPECT_EQ(ch.at(0, 0), 0.0);
    EXPECT_EQ(ch.at(0, 1), 1.0);
    EXPECT_EQ(ch.at(-1, 0), -1.0);
    EXPECT_EQ(ch.at(1, 0), -1.0);
    EXPECT_LT(ch.at(-1, 0), ch.at(0, 1));
    // The plain channel only sees the cost behind the cell.
    EXPECT_EQ(local_channel(f, {1, 0}, 3).at(0, 1), -3.0);

    std::mt19937_64 rng(31);
    for (int k = 0; k < 40; ++k) {
        const GridMap g = oracle::random_map(8, 8, 0.2, rng);
        const auto cells = oracle::free_cells(g);
        if (cells.size() < 2) continue;
        const Vertex t = cells[rng() % cells.size()], c = cells[rng() % cells.size()];
        const CostField u = compute_cost_field(g, WeightField::uniform(g), t);
        if (!u.reachable(c)) continue;
        const auto plain = local_channel(u, c, 5), weighted = local_channel(u, WeightField::uniform(g), c, 5);
        for (int dr = -2; dr <= 2; ++dr) {
            for (int dc = -2; dc <= 2; ++dc) ASSERT_EQ(plain.at(dr, dc), weighted.at(dr, dc));
        }
    }
}

TEST(LocalChannel, CenterUnreachable) {
    const std::string rows[] = {".@."};
    const GridMap m = GridMap::from_rows(rows);
    const CostField f = compute_cost_field(m, WeightField::uniform(m), {0, 2});
    try {
        local_channel(f, {0, 0}, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CenterUnreachable);
    }
}

TEST(PenalizedCost, MatchesReferenceWithPenalty) {
    std::mt19937_64 rng(25);
    for (int k = 0; k < 200; ++k) {
        const GridMap m = oracle::random_map(8, 8, 0.25, rng);
        const auto cells = oracle::free_cells(m);
        if (cells.size() < 3) continue;
        const WeightField w = k % 2 ? WeightField::uniform(m) : weighted(m, rng, 0.5, 4.0);
        const Vertex goal = cells[rng() % cells.size()];
        const Vertex start = cells[rng() % cells.size()];
        const Vertex v = cells[rng() % cells.size()];
        const CostField f = compute_cost_field(m, w, goal);
        if (!f.reachable(start)) continue;
        const double penalty = 1000.0;
        std::vector<double> pw = values(w);
        pw[m.index(v)] += penalty;
        const double expected = oracle::slow_costs(m, pw, goal)[m.index(start)];
        ASSERT_NEAR(penalized_cost(m, w, f, start, v, penalty), expected, 1e-9);
    }
}

TEST(WeightField, RejectsInconsistentValues) {
    const std::string rows[] = {".@"};
    const GridMap m = GridMap::from_rows(rows);
    EXPECT_THROW(WeightField(m, {1.0, 1.0}), Error);
    EXPECT_THROW(WeightField(m, {0.0, kInfinity}), Error);
    EXPECT_THROW(WeightField(m, {1.0}), Error);
    EXPECT_NO_THROW(WeightField(m, {2.5, kInfinity}));
}

TEST(WeightField, FingerprintTracksContent) {
    const GridMap m = GridMap::empty(4, 4);
    WeightField a = WeightField::uniform(m);
    const auto before = a.fingerprint();
    a.add({1, 2}, 3.0);
    EXPECT_NE(a.fingerprint(), before);
    std::vector<double> v(16, 1.0);
    v[m.index({1, 2})] = 4.0;
    EXPECT_EQ(WeightField(m, v).fingerprint(), a.fingerprint());
}
