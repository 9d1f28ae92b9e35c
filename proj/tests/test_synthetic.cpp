#include <doctest.h>

#include <filesystem>

#include "emogene/synthetic.hpp"

using namespace emogene;

TEST_CASE("generator: zero energy keeps the mouth closed on the template") {
    GeneratorConfig cfg = GeneratorConfig::defaults();
    cfg.energy_amp = 0.f;
    const auto clip = generate_clip(1, 5, EmotionLabel::Neutral, cfg);
    const Tensor<float> tmpl = face_template();
    for (std::size_t f = 0; f < 5; ++f)
        for (std::size_t p = 0; p < kLandmarkPoints; ++p)
            for (std::size_t d = 0; d < kLandmarkDims; ++d)
                CHECK(clip.neutral.at(f, p, d) == tmpl.at(p, d));
}

TEST_CASE("generator: same seed yields byte-identical datasets") {
    const GeneratorConfig cfg = GeneratorConfig::defaults();
    const auto a = generate_synthetic_dataset(11, 4, 10, cfg);
    const auto b = generate_synthetic_dataset(11, 4, 10, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].audio.features.data == b[i].audio.features.data);
        CHECK(a[i].audio.energy == b[i].audio.energy);
        CHECK(a[i].neutral.values.data == b[i].neutral.values.data);
        CHECK(a[i].emotional.values.data == b[i].emotional.values.data);
    }
    const auto c = generate_synthetic_dataset(12, 4, 10, cfg);
    CHECK(a[0].audio.energy != c[0].audio.energy);
}

TEST_CASE("generator: happy minus neutral equals the configured delta exactly") {
    const GeneratorConfig cfg = GeneratorConfig::defaults();
    // same clip seed -> same audio/energy stream for both labels
    const auto happy = generate_clip(5, 8, EmotionLabel::Happy, cfg);
    const auto neutral = generate_clip(5, 8, EmotionLabel::Neutral, cfg);
    CHECK(happy.audio.energy == neutral.audio.energy);
    const Tensor<float> delta = cfg.delta_tensor(EmotionLabel::Happy);
    for (std::size_t f = 0; f < 8; ++f)
        for (std::size_t p = 0; p < kLandmarkPoints; ++p)
            for (std::size_t d = 0; d < kLandmarkDims; ++d) {
                const float diff = happy.emotional.at(f, p, d) - neutral.emotional.at(f, p, d);
                CHECK(diff == doctest::Approx(delta.at(p, d)).epsilon(1e-6));
            }
    // and the emotional displacement is energy-independent: same diff per frame
    for (std::size_t p : cfg.displaced_points(EmotionLabel::Happy))
        CHECK(delta.at(p, 1) != 0.f);
}

TEST_CASE("generator: config echo round-trips the delta tables") {
    const GeneratorConfig cfg = GeneratorConfig::defaults();
    const auto path =
        (std::filesystem::temp_directory_path() / "emogene_gen.cfg").string();
    cfg.write(path);
    const GeneratorConfig back = GeneratorConfig::read(path);
    CHECK(back.feature_dim == cfg.feature_dim);
    CHECK(back.mouth_gain == doctest::Approx(cfg.mouth_gain));
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        const auto label = static_cast<EmotionLabel>(i);
        const auto a = cfg.delta_tensor(label), b = back.delta_tensor(label);
        REQUIRE(a.size() == b.size());
        for (std::size_t j = 0; j < a.size(); ++j)
            CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-6));
    }
}

TEST_CASE("generator: frames_per_clip < 2 rejected") {
    CHECK_THROWS_AS(generate_clip(1, 1, EmotionLabel::Neutral, GeneratorConfig::defaults()),
                    Error);
}

TEST_CASE("generator: missing delta table for a label is a config error") {
    GeneratorConfig cfg = GeneratorConfig::defaults();
    cfg.deltas.erase(EmotionLabel::Happy);
    CHECK_THROWS_AS(generate_clip(1, 4, EmotionLabel::Happy, cfg), ConfigError);
}

TEST_CASE("generator: dataset cycles through all 8 emotions") {
    const auto ds = generate_synthetic_dataset(3, 10, 4, GeneratorConfig::defaults());
    for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(ds[i].label == static_cast<EmotionLabel>(i % kEmotionCount));
}

TEST_CASE("pose trace: rotation block determinant within 1e-3 of 1") {
    const auto poses = generate_pose_trace(7, 20);
    for (std::size_t t = 0; t < poses.frames(); ++t) {
        const float* r = poses.row(t);
        const double det =
            double(r[0]) * (double(r[5]) * r[10] - double(r[6]) * r[9]) -
            double(r[1]) * (double(r[4]) * r[10] - double(r[6]) * r[8]) +
            double(r[2]) * (double(r[4]) * r[9] - double(r[5]) * r[8]);
        CHECK(std::abs(det - 1.0) < 1e-3);
    }
}

TEST_CASE("audio energy: nonnegative and bounded by the amplitude") {
    const GeneratorConfig cfg = GeneratorConfig::defaults();
    const auto clip = generate_clip(9, 50, EmotionLabel::Neutral, cfg);
    for (float e : clip.audio.energy) {
        CHECK(e >= 0.f);
        CHECK(e <= cfg.energy_amp + 1e-6f);
    }
}
