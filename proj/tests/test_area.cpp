#include <doctest.h>

#include "gfrag/area.hpp"
#include "gfrag/error.hpp"
#include "gfrag/numeric.hpp"

#include <cmath>
#include <map>

using namespace gfrag;

namespace {

const CumulantModel& model_02() {
    static const CumulantModel m = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.2);
    return m;
}

const ResidualLifetimeBank& bank_02() {
    static const ResidualLifetimeBank b = ResidualLifetimeBank::build(model_02(), 4096, 99);
    return b;
}

TruncationPolicy coarse(double floor = 1e-3) {
    TruncationPolicy p;
    p.size_floor = floor;
    return p;
}

}  // namespace

TEST_CASE("profile of a frozen root") {
    TruncationPolicy p;
    p.generation_cap = 0;
    const auto sys = build_system(1.0, model_02(), p, 3);
    const auto freeze = area_profile(sys, AreaMode::Freeze, 0);
    REQUIRE(freeze.atoms().size() == 1);
    CHECK(freeze.atoms()[0].location == 0.0);
    CHECK(freeze.atoms()[0].mass == 1.0);
    CHECK(freeze(0.0) == 1.0);

    CHECK_THROWS_AS(area_profile(sys, AreaMode::SpineExtend, 0), DomainError);

    // The SpineExtend location of a frozen unit root is a draw of I.
    std::vector<double> located;
    for (std::uint64_t seed = 0; seed < 2000; ++seed)
        located.push_back(area_profile(sys, AreaMode::SpineExtend, seed, &bank_02()).atoms()[0].location);
    const auto direct = sample_exp_functional(build_spine_triplet(model_02()), -0.2, 2000, 12345);
    const double d = ks_two_sample(located, direct.values);
    CHECK(ks_p_value(d, 2000, 2000) > 1e-3);
}

TEST_CASE("profile invariants") {
    const auto& m = model_02();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sys = build_system(1.0, m, coarse(1e-4), seed);
        const auto fr = area_profile(sys, AreaMode::Freeze, seed);
        const auto sp = area_profile(sys, AreaMode::SpineExtend, seed, &bank_02());
        REQUIRE(fr.atoms().size() == sys.size());
        CHECK(fr(-1.0) == 0.0);
        CHECK(fr.total_mass() == doctest::Approx(sp.total_mass()).epsilon(1e-12));
        CHECK(sp(1e9) == sp.total_mass());
        double prev = 0.0;
        for (double t : lin_space(0.0, 5.0, 101)) {
            const double a = sp(t);
            CHECK(a >= prev);
            prev = a;
            CHECK(fr(t) >= sp(t) - 1e-12);
        }
        CHECK(sp.location_quantile(0.0) <= sp.location_quantile(0.5));
        CHECK(sp.location_quantile(1.0) == sp.atoms().back().location);
    }
}

TEST_CASE("total area has mean one") {
    std::vector<double> totals;
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
        totals.push_back(area_profile(build_system(1.0, model_02(), coarse(1e-3), seed), AreaMode::Freeze, 0).total_mass());
    const auto est = mean_and_se(totals);
    CHECK(std::abs(est.mean - 1.0) < 3.0 * est.std_error);
}

TEST_CASE("fragment statistics") {
    const auto& m = model_02();
    const double w = m.omega_minus();
    SUBCASE("single fragment") {
        const auto sys = build_system(0.5, m, coarse(), 1);
        const double t0[] = {0.0};
        const double eps[] = {0.25, 1.0};
        const auto st = fragment_stats(sys, t0, eps);
        CHECK(st.m_at(0, 1) == doctest::Approx(std::pow(0.5, w)).epsilon(1e-15));
        CHECK(st.n_at(0, 1) == 0.0);
        CHECK(st.m_at(0, 0) == 0.0);
        CHECK(st.n_at(0, 0) == 1.0);
    }
    SUBCASE("partition identity and monotonicity") {
        const auto eps = log_space(1e-5, 1.0, 16);
        const auto ts = lin_space(0.0, 2.0, 9);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto sys = build_system(1.0, m, coarse(1e-5), seed);
            const auto prof = area_profile(sys, AreaMode::SpineExtend, seed, &bank_02());
            const auto st = fragment_stats(sys, ts, eps, &prof);
            for (std::size_t ti = 0; ti < ts.size(); ++ti) {
                auto frags = fragments_at(sys, ts[ti]);
                for (const auto& a : prof.atoms())
                    if (a.start <= ts[ti] && ts[ti] < a.location) frags.push_back(a.size);
                for (std::size_t ei = 0; ei < eps.size(); ++ei) {
                    double above = 0.0;
                    for (double x : frags)
                        if (x > eps[ei]) above += std::pow(x, w);
                    CHECK(st.m_at(ti, ei) + above == doctest::Approx(st.power_sum[ti]).epsilon(1e-12));
                    if (ei) {
                        CHECK(st.m_at(ti, ei) >= st.m_at(ti, ei - 1));
                        CHECK(st.n_at(ti, ei) <= st.n_at(ti, ei - 1));
                    }
                }
            }
        }
    }
    SUBCASE("pooling") {
        const auto eps = log_space(1e-3, 1.0, 4);
        const double ts[] = {0.1, 0.5};
        auto a = fragment_stats(build_system(1.0, m, coarse(), 1), ts, eps);
        const auto b = fragment_stats(build_system(1.0, m, coarse(), 2), ts, eps);
        const double m01 = a.m_at(1, 3) + b.m_at(1, 3);
        a += b;
        CHECK(a.systems == 2);
        CHECK(a.m_at(1, 3) == m01);
        FragmentStats other = b;
        other.eps_grid[0] *= 2;
        CHECK_THROWS_AS(a += other, DomainError);
    }
}

TEST_CASE("profile estimate on synthetic statistics") {
    const auto& m = model_02();
    const double alpha = -0.2;
    const double w = m.omega_minus();
    const double kp = m.kprime_at_omega_minus();
    FragmentStats st;
    st.t_grid = {0.5, 1.0};
    st.eps_grid = log_space(1e-8, 1e-1, 29);
    st.systems = 4;
    st.omega_minus = w;
    st.size_floor = 1e-9;
    st.power_sum = {1.0, 0.0};
    st.nonempty = {4, 0};
    st.log_largest_sum = {4 * std::log(0.5), 0.0};
    const double c = 0.3;
    for (std::size_t ti = 0; ti < 2; ++ti)
        for (double e : st.eps_grid) {
            // Exact power laws consistent with each other.
            const double mm = ti == 0 ? 4 * c * std::pow(e, -alpha) : 0.0;
            const double nn = ti == 0 ? 4 * c * (-alpha) / (w + alpha) * std::pow(e, -(w + alpha)) : 0.0;
            st.m.push_back(mm);
            st.n.push_back(nn);
        }
    const auto est = profile_estimate(st, m);
    CHECK(est.converges);
    REQUIRE(est.points.size() == 2);
    const auto& p = est.points[0];
    REQUIRE(p.estimated);
    CHECK(p.eps_lo == doctest::Approx(1e-8));
    CHECK(p.eps_hi == doctest::Approx(0.05));
    CHECK(p.m_slope == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(p.n_slope == doctest::Approx(-(w + alpha)).epsilon(1e-10));
    CHECK(p.a_from_m == doctest::Approx(alpha * kp * c).epsilon(1e-10));
    CHECK(p.a_from_n == doctest::Approx(alpha * kp * c).epsilon(1e-10));
    CHECK(p.a_from_n_raw == doctest::Approx(alpha * kp * c).epsilon(1e-10));
    CHECK(p.n_offset == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(p.small_eps_ratio == doctest::Approx(1.0).epsilon(1e-10));

    // A constant offset in N is removed by the extrapolation but not by the raw plateau.
    FragmentStats shifted = st;
    for (std::size_t ei = 0; ei < shifted.eps_grid.size(); ++ei) shifted.n[ei] -= 4 * 2.0;
    const auto se = profile_estimate(shifted, m).points[0];
    CHECK(se.a_from_n == doctest::Approx(alpha * kp * c).epsilon(1e-8));
    CHECK(se.n_offset == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(se.a_from_n_raw < alpha * kp * c);

    CHECK(!est.points[1].estimated);
    CHECK(est.points[1].a_from_m == 0.0);
    CHECK(est.points[1].a_from_n == 0.0);

    ProfileEstimateOptions narrow;
    narrow.interior_lo = 0.8;
    CHECK(!profile_estimate(st, m, narrow).points[0].estimated);

    const auto singular = CumulantModel::from_triplet(reference_dyadic_triplet(), -0.5);
    CHECK(!profile_estimate(st, singular).converges);
}

TEST_CASE("tag_leaf") {
    const auto& m = model_02();
    SUBCASE("single atom") {
        TruncationPolicy p;
        p.generation_cap = 0;
        const auto sys = build_system(1.0, m, p, 3);
        const auto prof = area_profile(sys, AreaMode::Freeze, 0);
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto leaf = tag_leaf(sys, prof, s);
            CHECK(leaf.atom == 0);
            CHECK(leaf.path.empty());
            CHECK(leaf.lifetime == 0.0);
        }
    }
    SUBCASE("two frozen roots") {
        TruncationPolicy p;
        p.generation_cap = 0;
        const double roots[] = {1.0, 0.5};
        const auto sys = build_system(roots, m, p, 3);
        const auto prof = area_profile(sys, AreaMode::Freeze, 0);
        const LeafTagger tagger(sys, prof);
        const double m1 = 1.0;
        const double m2 = std::pow(0.5, m.omega_minus());
        const double expected = m1 / (m1 + m2);
        std::size_t first = 0;
        const std::size_t n = 10000;
        for (std::uint64_t s = 0; s < n; ++s) first += tagger.tag(s).root == 0 ? 1 : 0;
        const double se = std::sqrt(expected * (1 - expected) / n);
        CHECK(std::abs(static_cast<double>(first) / n - expected) < 3 * se);
    }
    SUBCASE("descent structure and marginal law") {
        const auto sys = build_system(1.0, m, coarse(1e-4), 8);
        const auto prof = area_profile(sys, AreaMode::SpineExtend, 8, &bank_02());
        const LeafTagger tagger(sys, prof);
        CHECK(tagger.subtree_mass(0) == doctest::Approx(prof.total_mass()).epsilon(1e-12));
        std::map<std::size_t, std::size_t> hits;
        const std::size_t n = 20000;
        for (std::uint64_t s = 0; s < n; ++s) {
            const auto leaf = tagger.tag(s);
            ++hits[leaf.atom];
            REQUIRE(leaf.records.size() == leaf.path.size() + 1);
            for (std::size_t k = 1; k < leaf.records.size(); ++k) REQUIRE(sys[leaf.records[k]].parent == leaf.records[k - 1]);
            double total = leaf.residual;
            for (double seg : leaf.segments) total += seg;
            CHECK(total == doctest::Approx(leaf.lifetime).epsilon(1e-12));
            CHECK(leaf.lifetime == prof.atoms()[leaf.atom].location);
            bool ordered = true;
            for (std::size_t k = 1; k < leaf.trajectory.size(); ++k)
                ordered = ordered && leaf.trajectory[k].age >= leaf.trajectory[k - 1].age;
            CHECK(ordered);
        }
        // Frequencies of the heaviest atoms match mass / total.
        for (std::size_t k = 0; k < prof.atoms().size(); ++k) {
            const double pk = prof.atoms()[k].mass / prof.total_mass();
            if (pk < 0.05) continue;
            const double se = std::sqrt(pk * (1 - pk) / n);
            CHECK(std::abs(static_cast<double>(hits[k]) / n - pk) < 4 * se);
        }
    }
    SUBCASE("area-biased tagged lifetimes follow I") {
        const auto tagged = size_biased_tagged_lifetimes(m, coarse(1e-2), bank_02(), 600, 5, 5);
        const auto direct = sample_exp_functional(build_spine_triplet(m), -0.2, 600, 777);
        const double d = ks_two_sample(tagged, direct.values);
        CHECK(ks_p_value(d, 600, 600) > 1e-3);
    }
}

TEST_CASE("branching identity") {
    const auto& m = model_02();
    const auto zero = branching_identity_check(m, coarse(1e-2), bank_02(), 0.2, 0.0, 50, 1);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(zero.direct[i] == 0.0);
        CHECK(zero.composed[i] == 0.0);
    }
    CHECK(zero.ks_distance == 0.0);
    const auto rep = branching_identity_check(m, coarse(1e-2), bank_02(), 0.2, 1.2, 400, 2, 2);
    CHECK(ks_p_value(rep.ks_distance, 400, 400) > 1e-3);
    const auto again = branching_identity_check(m, coarse(1e-2), bank_02(), 0.2, 1.2, 400, 2, 1);
    CHECK(again.composed == rep.composed);
}

TEST_CASE("small-time table") {
    const auto& m = model_02();
    const double far[] = {1e3, 2e3};
    const auto rep = small_time_check(m, coarse(1e-2), bank_02(), far, 10, 4);
    CHECK(rep.low_power);
    CHECK(!rep.pass);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].eps == 2e3);
    CHECK(rep.rows[0].mean_area == rep.rows[1].mean_area);
    CHECK(rep.rows[0].ratio < rep.rows[1].ratio);
    CHECK(!rep.strictly_decreasing);
}
