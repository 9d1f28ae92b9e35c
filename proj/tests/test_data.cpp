#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "emogene/data.hpp"
#include "emogene/image.hpp"
#include "emogene/rng.hpp"

using namespace emogene;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("emogene_test_" + name)).string();
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

LandmarkSequence random_landmarks(std::size_t frames, std::uint64_t seed) {
    Rng rng(seed);
    LandmarkSequence seq(frames);
    for (auto& v : seq.values.data) v = static_cast<float>(rng.gaussian());
    return seq;
}

}  // namespace

TEST_CASE("landmarks: 10-frame sequence round-trips to identical bytes") {
    const auto seq = random_landmarks(10, 77);
    const auto p1 = tmp_path("lmk_a.lmk"), p2 = tmp_path("lmk_b.lmk");
    save_landmarks(seq, p1);
    const auto loaded = load_landmarks(p1);
    CHECK(loaded.frames() == 10);
    CHECK(loaded.values.data == seq.values.data);
    save_landmarks(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("landmarks: bad magic is a typed error") {
    const auto p = tmp_path("bad_magic.lmk");
    std::ofstream(p, std::ios::binary) << "XXXXrest-of-file";
    try {
        load_landmarks(p);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.code == IoCode::BadMagic);
    }
}

TEST_CASE("landmarks: truncated payload is a typed error") {
    const auto seq = random_landmarks(10, 78);
    const auto p = tmp_path("trunc.lmk");
    save_landmarks(seq, p);
    // chop one frame's worth of floats off the end
    const auto bytes = slurp(p);
    std::ofstream os(p, std::ios::binary);
    os.write(bytes.data(),
             static_cast<std::streamsize>(bytes.size() - kLandmarkFlat * 4));
    os.close();
    try {
        load_landmarks(p);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.code == IoCode::Truncated);
    }
}

TEST_CASE("landmarks: wrong point count is a typed error") {
    const auto p = tmp_path("points.lmk");
    std::ofstream os(p, std::ios::binary);
    os.write("LMK1", 4);
    const std::uint32_t frames = 1, points = 10, dims = 3;
    os.write(reinterpret_cast<const char*>(&frames), 4);
    os.write(reinterpret_cast<const char*>(&points), 4);
    os.write(reinterpret_cast<const char*>(&dims), 4);
    os.close();
    try {
        load_landmarks(p);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.code == IoCode::BadPointCount);
    }
}

TEST_CASE("poses and audio round-trip") {
    Rng rng(5);
    PoseTensor poses(6);
    for (auto& v : poses.values.data) v = static_cast<float>(rng.gaussian());
    const auto pp = tmp_path("poses.pos");
    save_poses(poses, pp);
    CHECK(load_poses(pp).values.data == poses.values.data);

    AudioFeatureSequence audio;
    audio.features = Tensor<float>::randn({6, 4}, rng);
    audio.energy.assign(6, 0.25f);
    const auto ap = tmp_path("audio.aud");
    save_audio(audio, ap);
    const auto loaded = load_audio(ap);
    CHECK(loaded.features.data == audio.features.data);
    CHECK(loaded.energy == audio.energy);
}

TEST_CASE("checkpoint: empty checkpoint round-trips") {
    Checkpoint ck;
    ck.seed = 99;
    const auto p = tmp_path("empty.egck");
    save_checkpoint(ck, p);
    const auto loaded = load_checkpoint(p);
    CHECK(loaded.tensors.empty());
    CHECK(loaded.seed == 99);
    CHECK(loaded.version == 1);
}

TEST_CASE("checkpoint: save-load-save is byte idempotent") {
    Rng rng(3);
    Checkpoint ck;
    ck.seed = 42;
    ck.tensors["b.weight"] = Tensor<float>::randn({3, 4}, rng);
    ck.tensors["a.bias"] = Tensor<float>::randn({7}, rng);
    const auto p1 = tmp_path("ck1.egck"), p2 = tmp_path("ck2.egck");
    save_checkpoint(ck, p1);
    const auto loaded = load_checkpoint(p1);
    save_checkpoint(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(loaded.tensors.at("b.weight").data == ck.tensors.at("b.weight").data);
}

TEST_CASE("checkpoint: duplicate tensor names rejected on load") {
    // craft a file with the same name twice
    const auto p = tmp_path("dup.egck");
    {
        std::ofstream os(p, std::ios::binary);
        os.write("EGCK", 4);
        const std::uint32_t version = 1, count = 2, name_len = 1, rank = 1, dim = 1;
        const std::uint64_t seed = 0;
        const float v = 1.f;
        os.write(reinterpret_cast<const char*>(&version), 4);
        os.write(reinterpret_cast<const char*>(&seed), 8);
        os.write(reinterpret_cast<const char*>(&count), 4);
        for (int i = 0; i < 2; ++i) {
            os.write(reinterpret_cast<const char*>(&name_len), 4);
            os.write("x", 1);
            os.write(reinterpret_cast<const char*>(&rank), 4);
            os.write(reinterpret_cast<const char*>(&dim), 4);
            os.write(reinterpret_cast<const char*>(&v), 4);
        }
    }
    try {
        load_checkpoint(p);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.code == IoCode::DuplicateTensorName);
    }
}

TEST_CASE("checkpoint: version mismatch rejected") {
    const auto p = tmp_path("ver.egck");
    {
        std::ofstream os(p, std::ios::binary);
        os.write("EGCK", 4);
        const std::uint32_t version = 7, count = 0;
        const std::uint64_t seed = 0;
        os.write(reinterpret_cast<const char*>(&version), 4);
        os.write(reinterpret_cast<const char*>(&seed), 8);
        os.write(reinterpret_cast<const char*>(&count), 4);
    }
    try {
        load_checkpoint(p);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.code == IoCode::VersionMismatch);
    }
}

TEST_CASE("emotion labels: closed set of 8 with string round-trip") {
    CHECK(emotion_names().size() == 8);
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        const auto label = static_cast<EmotionLabel>(i);
        const auto parsed = parse_emotion(to_string(label));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == label);
    }
    CHECK_FALSE(parse_emotion("bored").has_value());
}

TEST_CASE("image: imf round-trip is lossless, ppm is quantized") {
    Image img(8, 5, 3);
    Rng rng(2);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    const auto ip = tmp_path("img.imf");
    save_imf(img, ip);
    const auto back = load_imf(ip);
    CHECK(back.width == 8);
    CHECK(back.data == img.data);

    const auto pp = tmp_path("img.ppm");
    save_ppm(img, pp);
    const auto ppm = load_ppm(pp);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(ppm.data[i] - img.data[i]) <= 0.5f / 255.f + 1e-6f);
}
