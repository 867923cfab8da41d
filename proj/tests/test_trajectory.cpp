#include "helpers.hpp"

#include <doctest.h>

using namespace gramtraj;

TEST_CASE("centering and scale normalisation") {
    std::mt19937_64 rng(21);
    const LandmarkFrame z = testing::random_factor(rng, 10, 5.0).array() + 3.0;
    const auto c = center_frame(z);
    CHECK(c.colwise().sum().norm() < 1e-12);
    CHECK(scale_normalize(c).norm() == doctest::Approx(1.0));
    const LandmarkFrame zero = LandmarkFrame::Zero(4, 2);
    CHECK(scale_normalize(zero).norm() == 0.0);
}

TEST_CASE("velocities and subsampling") {
    std::vector<LandmarkFrame> frames;
    for (int i = 0; i < 9; ++i) frames.push_back(LandmarkFrame::Constant(3, 2, i * i));
    const auto v = velocities(frames);
    REQUIRE(v.size() == 8);
    CHECK(v[2](0, 0) == doctest::Approx(9.0 - 4.0));
    CHECK(subsample(frames, 1.0).size() == 9);
    CHECK(subsample(frames, 0.5).size() == 5);
    CHECK(subsample(frames, 0.25).size() == 3);
    CHECK(subsample(frames, 0.5)[1](0, 0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(subsample(frames, 0.3), Error);
    CHECK_THROWS_AS(subsample(frames, 0.0), Error);
    CHECK_THROWS_AS(velocities({frames[0]}), Error);
}

TEST_CASE("standard region maps") {
    const auto r68 = RegionMap::standard(68);
    CHECK(r68.at("jaw").indices.size() == 17);
    CHECK(r68.at("nose").indices.size() == 9);
    CHECK(r68.at("mouth").indices.size() == 20);
    CHECK(r68.at("eyes").indices.size() == 22);
    CHECK(r68.max_index() == 67);
    const auto r66 = RegionMap::standard(66);
    CHECK(r66.at("mouth").indices.size() == 18);
    CHECK(r66.max_index() == 65);
    CHECK_THROWS_AS(RegionMap::standard(49), Error);
    CHECK_THROWS_AS(r68.at("ears"), Error);
}

TEST_CASE("region maps reject overlaps and duplicates") {
    CHECK_THROWS_AS(RegionMap({{"a", {0, 1}}, {"b", {1, 2}}}), Error);
    CHECK_THROWS_AS(RegionMap({{"a", {0}}, {"a", {1}}}), Error);
    CHECK_THROWS_AS(RegionMap(std::vector<Region>{Region{"a", {}}}), Error);
    CHECK_THROWS_AS(RegionMap(std::vector<Region>{}), Error);
}

TEST_CASE("sequence validation") {
    std::mt19937_64 rng(22);
    auto s = testing::random_sequence(rng, 5, 6);
    CHECK_NOTHROW(validate_sequence(s));
    auto short_seq = s;
    short_seq.frames.resize(1);
    CHECK_THROWS_AS(validate_sequence(short_seq), Error);
    auto ragged = s;
    ragged.frames[2] = LandmarkFrame::Zero(5, 2);
    CHECK_THROWS_AS(validate_sequence(ragged), Error);
    auto nan = s;
    nan.frames[3](1, 0) = std::nan("");
    CHECK_THROWS_AS(validate_sequence(nan), Error);
}

TEST_CASE("trajectory construction") {
    std::mt19937_64 rng(23);
    const auto s = testing::random_sequence(rng, 11, 68);
    const auto regions = RegionMap::standard(68);
    const auto t = build_trajectories(s, regions, {true, 0.5});
    REQUIRE(t.size() == 4);
    const auto& mouth = t.at("mouth");
    // 11 frames -> 6 kept -> 5 velocity-bearing points.
    REQUIRE(mouth.size() == 5);
    CHECK(mouth.points[0].rows() == 40);
    CHECK(mouth.times[4] == 4.0);

    // Oracle: assemble the second factor by hand.
    const auto z2 = scale_normalize(center_frame(s.frames[2]));
    const auto z4 = scale_normalize(center_frame(s.frames[4]));
    const auto& f = mouth.points[1].matrix();
    for (int r = 0; r < 20; ++r) {
        CHECK(f(r, 0) == doctest::Approx(z2(48 + r, 0)));
        CHECK(f(20 + r, 1) == doctest::Approx(z4(48 + r, 1) - z2(48 + r, 1)));
    }
    CHECK(mouth.subject_id == s.subject_id);

    RegionMap bad({{"x", {70}}});
    CHECK_THROWS_AS(build_trajectories(s, bad, {}), Error);
    auto tiny = s;
    tiny.frames.resize(3);
    CHECK_THROWS_AS(build_trajectories(tiny, regions, {true, 0.25}), Error);
}

TEST_CASE("scale normalisation removes global scale") {
    std::mt19937_64 rng(24);
    auto s = testing::random_sequence(rng, 6, 68);
    auto big = s;
    for (auto& z : big.frames) z *= 3.7;
    const auto regions = RegionMap::standard(68);
    const auto a = build_trajectories(s, regions, {true, 1.0});
    const auto b = build_trajectories(big, regions, {true, 1.0});
    CHECK(distance(a.at("jaw").points[2], b.at("jaw").points[2]) < 1e-12);
    const auto c = build_trajectories(big, regions, {false, 1.0});
    CHECK(distance(a.at("jaw").points[2], c.at("jaw").points[2]) > 1e-3);
}

TEST_CASE("flip augmentation") {
    std::mt19937_64 rng(25);
    const auto s = testing::random_sequence(rng, 4, 5, "q1", "p1", 3.0);
    const auto f = flip_augment(s);
    CHECK(f.sequence_id == "q1+flip");
    CHECK(f.augmented);
    CHECK(f.subject_id == "p1");
    CHECK(f.frames[1](2, 0) == -s.frames[1](2, 0));
    CHECK(f.frames[1](2, 1) == s.frames[1](2, 1));
    CHECK(flip_augment(f).frames[3] == s.frames[3]);
}

TEST_CASE("minority-class augmentation") {
    std::mt19937_64 rng(26);
    Dataset d;
    int id = 0;
    for (auto [label, count] : {std::pair{0, 5}, {1, 5}, {2, 1}}) {
        for (int i = 0; i < count; ++i) {
            d.push_back(testing::random_sequence(rng, 3, 4, "s" + std::to_string(id++), "p", label));
        }
    }
    const auto below = augment_minority_classes(d, BelowMeanClassCount{});
    REQUIRE(below.size() == 12);
    CHECK(below.back().augmented);
    CHECK(below.back().label == 2.0);
    const auto picked = augment_minority_classes(d, ExplicitLabels{{0, 2}});
    CHECK(picked.size() == 17);
    CHECK(label_class(2.49) == 2);
    CHECK(label_class(2.5) == 3);
}
