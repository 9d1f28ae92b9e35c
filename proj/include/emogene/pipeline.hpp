#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "emogene/audio2motion.hpp"
#include "emogene/data.hpp"
#include "emogene/emotion2video.hpp"
#include "emogene/errors.hpp"
#include "emogene/idlepose.hpp"
#include "emogene/metrics.hpp"
#include "emogene/motion2emotion.hpp"
#include "emogene/sync_proxy.hpp"
#include "emogene/synthetic.hpp"

namespace emogene {

namespace fs = std::filesystem;

struct PipelineConfig {
    std::string dataset_dir = "data";
    std::string checkpoint_dir = "checkpoints";
    std::string output_dir = "out";
    std::uint64_t seed = 42;
    // data
    std::size_t n_clips = 8;
    std::size_t frames_per_clip = 40;
    // render
    std::size_t render_size = 32;
    std::size_t n_render_frames = 4;
    A2mTrainConfig a2m;
    SyncTrainConfig sync;
    LdmTrainConfig ldm;
    ClassifierTrainConfig classifier;
    NerfTrainConfig nerf;
    SamplerConfig idle;
    bool no_ldm = false;
};

// Plain-text key = value config with [section] headers.
inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    PipelineConfig c;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("bad config line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            const std::string fq = section.empty() ? key : section + "." + key;
            if (fq == "global.seed" || fq == "seed") c.seed = std::stoull(val);
            else if (fq == "global.dataset_dir") c.dataset_dir = val;
            else if (fq == "global.checkpoint_dir") c.checkpoint_dir = val;
            else if (fq == "global.output_dir") c.output_dir = val;
            else if (fq == "data.n_clips") c.n_clips = std::stoul(val);
            else if (fq == "data.frames_per_clip") c.frames_per_clip = std::stoul(val);
            else if (fq == "render.size") c.render_size = std::stoul(val);
            else if (fq == "render.frames") c.n_render_frames = std::stoul(val);
            else if (fq == "a2m.steps") c.a2m.steps = std::stoul(val);
            else if (fq == "a2m.lr") c.a2m.lr = std::stof(val);
            else if (fq == "a2m.latent_dim") c.a2m.latent_dim = std::stoul(val);
            else if (fq == "a2m.kl_weight") c.a2m.kl_weight = std::stof(val);
            else if (fq == "sync.steps") c.sync.steps = std::stoul(val);
            else if (fq == "ldm.steps") c.ldm.steps = std::stoul(val);
            else if (fq == "ldm.lr") c.ldm.lr = std::stof(val);
            else if (fq == "nerf.steps") c.nerf.steps = std::stoul(val);
            else if (fq == "nerf.lr") c.nerf.lr = std::stof(val);
            else if (fq == "nerf.hidden") c.nerf.hidden = std::stoul(val);
            else if (fq == "nerf.batch_rays") c.nerf.batch_rays = std::stoul(val);
            else if (fq == "nerf.n_samples") c.nerf.n_samples = std::stoul(val);
            else if (fq == "idle.len_gap") c.idle.len_gap = std::stoul(val);
            else if (fq == "idle.silence_threshold")
                c.idle.silence_threshold = std::stof(val);
            else if (fq == "pipeline.no_ldm") c.no_ldm = (val == "1" || val == "true");
            else throw ConfigError("unknown config key: " + fq);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("bad value for " + key + " at line " + std::to_string(lineno));
        }
    }
    return c;
}

inline void write_pipeline_config(const PipelineConfig& c, const std::string& path) {
    std::ofstream os(path);
    os << "[global]\n"
       << "seed = " << c.seed << "\n"
       << "dataset_dir = " << c.dataset_dir << "\n"
       << "checkpoint_dir = " << c.checkpoint_dir << "\n"
       << "output_dir = " << c.output_dir << "\n\n"
       << "[data]\n"
       << "n_clips = " << c.n_clips << "\n"
       << "frames_per_clip = " << c.frames_per_clip << "\n\n"
       << "[render]\n"
       << "size = " << c.render_size << "\n"
       << "frames = " << c.n_render_frames << "\n\n"
       << "[a2m]\n"
       << "steps = " << c.a2m.steps << "\n"
       << "lr = " << c.a2m.lr << "\n"
       << "latent_dim = " << c.a2m.latent_dim << "\n"
       << "kl_weight = " << c.a2m.kl_weight << "\n\n"
       << "[sync]\nsteps = " << c.sync.steps << "\n\n"
       << "[ldm]\n"
       << "steps = " << c.ldm.steps << "\n"
       << "lr = " << c.ldm.lr << "\n\n"
       << "[nerf]\n"
       << "steps = " << c.nerf.steps << "\n"
       << "lr = " << c.nerf.lr << "\n"
       << "hidden = " << c.nerf.hidden << "\n"
       << "batch_rays = " << c.nerf.batch_rays << "\n"
       << "n_samples = " << c.nerf.n_samples << "\n\n"
       << "[idle]\n"
       << "len_gap = " << c.idle.len_gap << "\n"
       << "silence_threshold = " << c.idle.silence_threshold << "\n\n"
       << "[pipeline]\nno_ldm = " << (c.no_ldm ? 1 : 0) << "\n";
}

// ---------------------------------------------------------------------------
// Checkpoint packing. Each model stores a small "meta" tensor describing its
// architecture so loading can rebuild the same shapes.

inline Checkpoint pack_vae(Vae<float>& vae, std::uint64_t seed) {
    Checkpoint ck;
    ck.seed = seed;
    ck.tensors["meta"] = Tensor<float>(
        {4}, {static_cast<float>(vae.audio_dim), static_cast<float>(vae.latent_dim),
              static_cast<float>(vae.enc_convs[0].out_channels()),
              static_cast<float>(vae.enc_convs.size())});
    vae.visit_params([&](const std::string& n, Tensor<float>& t) { ck.tensors[n] = t; });
    return ck;
}

inline Vae<float> unpack_vae(const Checkpoint& ck) {
    const auto& meta = ck.tensors.at("meta");
    Rng dummy(0);
    Vae<float> vae = Vae<float>::make(
        static_cast<std::size_t>(meta[0]), static_cast<std::size_t>(meta[1]),
        static_cast<std::size_t>(meta[2]), static_cast<std::size_t>(meta[3]), dummy);
    vae.visit_params([&](const std::string& n, Tensor<float>& t) {
        const auto& src = ck.tensors.at(n);
        if (!t.same_shape(src)) throw ShapeError("vae checkpoint shape mismatch: " + n);
        t = src;
    });
    return vae;
}

inline Checkpoint pack_ldm(LdmTrainResult& r, std::uint64_t seed) {
    Checkpoint ck;
    ck.seed = seed;
    const auto d_e = r.embedder.dim();
    const auto hidden = r.ldm.mlp.layers[0].w.shape[0];
    ck.tensors["meta"] =
        Tensor<float>({2}, {static_cast<float>(d_e), static_cast<float>(hidden)});
    for (std::size_t i = 0; i < r.ldm.mlp.layers.size(); ++i) {
        ck.tensors["ldm" + std::to_string(i) + ".w"] = r.ldm.mlp.layers[i].w;
        ck.tensors["ldm" + std::to_string(i) + ".b"] = r.ldm.mlp.layers[i].b;
    }
    ck.tensors["embedder.table"] = r.embedder.table;
    return ck;
}

inline LdmTrainResult unpack_ldm(const Checkpoint& ck) {
    const auto& meta = ck.tensors.at("meta");
    Rng dummy(0);
    LdmTrainResult r;
    r.ldm = Ldm<float>::make(static_cast<std::size_t>(meta[0]),
                             static_cast<std::size_t>(meta[1]), dummy);
    for (std::size_t i = 0; i < r.ldm.mlp.layers.size(); ++i) {
        r.ldm.mlp.layers[i].w = ck.tensors.at("ldm" + std::to_string(i) + ".w");
        r.ldm.mlp.layers[i].b = ck.tensors.at("ldm" + std::to_string(i) + ".b");
    }
    r.embedder.table = ck.tensors.at("embedder.table");
    return r;
}

inline Checkpoint pack_nerf(NerfModel& m, std::uint64_t seed) {
    Checkpoint ck;
    ck.seed = seed;
    ck.tensors["meta"] =
        Tensor<float>({1}, {static_cast<float>(m.head.mlp.layers[0].w.shape[0])});
    m.head.visit_params([&](const std::string& n, Tensor<float>& t) { ck.tensors[n] = t; });
    m.torso.visit_params([&](const std::string& n, Tensor<float>& t) { ck.tensors[n] = t; });
    return ck;
}

inline NerfModel unpack_nerf(const Checkpoint& ck) {
    const auto hidden = static_cast<std::size_t>(ck.tensors.at("meta")[0]);
    Rng dummy(0);
    NerfModel m;
    m.head = HeadField<float>::make(hidden, dummy);
    m.torso = TorsoField<float>::make(hidden, dummy);
    m.head.visit_params(
        [&](const std::string& n, Tensor<float>& t) { t = ck.tensors.at(n); });
    m.torso.visit_params(
        [&](const std::string& n, Tensor<float>& t) { t = ck.tensors.at(n); });
    return m;
}

inline Checkpoint pack_sync(SyncScorer& s, std::uint64_t seed) {
    Checkpoint ck;
    ck.seed = seed;
    ck.tensors["meta"] = Tensor<float>(
        {3}, {static_cast<float>(s.audio_dim),
              static_cast<float>(s.audio_net.layers[0].w.shape[0]),
              static_cast<float>(s.audio_net.layers.back().w.shape[0])});
    for (std::size_t i = 0; i < s.audio_net.layers.size(); ++i) {
        ck.tensors["audio" + std::to_string(i) + ".w"] = s.audio_net.layers[i].w;
        ck.tensors["audio" + std::to_string(i) + ".b"] = s.audio_net.layers[i].b;
        ck.tensors["lmk" + std::to_string(i) + ".w"] = s.lmk_net.layers[i].w;
        ck.tensors["lmk" + std::to_string(i) + ".b"] = s.lmk_net.layers[i].b;
    }
    return ck;
}

inline SyncScorer unpack_sync(const Checkpoint& ck) {
    const auto& meta = ck.tensors.at("meta");
    Rng dummy(0);
    SyncScorer s;
    s.audio_dim = static_cast<std::size_t>(meta[0]);
    const auto hidden = static_cast<std::size_t>(meta[1]);
    const auto embed = static_cast<std::size_t>(meta[2]);
    s.audio_net = Mlp<float>::make({kSyncWindow * s.audio_dim, hidden, embed},
                                   {Activation::ReLU, Activation::Identity}, dummy);
    s.lmk_net = Mlp<float>::make({kSyncWindow * kLandmarkFlat, hidden, embed},
                                 {Activation::ReLU, Activation::Identity}, dummy);
    for (std::size_t i = 0; i < s.audio_net.layers.size(); ++i) {
        s.audio_net.layers[i].w = ck.tensors.at("audio" + std::to_string(i) + ".w");
        s.audio_net.layers[i].b = ck.tensors.at("audio" + std::to_string(i) + ".b");
        s.lmk_net.layers[i].w = ck.tensors.at("lmk" + std::to_string(i) + ".w");
        s.lmk_net.layers[i].b = ck.tensors.at("lmk" + std::to_string(i) + ".b");
    }
    s.trained = true;
    return s;
}

inline Checkpoint pack_classifier(EmotionClassifier& c, std::uint64_t seed) {
    Checkpoint ck;
    ck.seed = seed;
    ck.tensors["meta"] =
        Tensor<float>({1}, {static_cast<float>(c.mlp.layers[0].w.shape[0])});
    for (std::size_t i = 0; i < c.mlp.layers.size(); ++i) {
        ck.tensors["cls" + std::to_string(i) + ".w"] = c.mlp.layers[i].w;
        ck.tensors["cls" + std::to_string(i) + ".b"] = c.mlp.layers[i].b;
    }
    return ck;
}

inline EmotionClassifier unpack_classifier(const Checkpoint& ck) {
    const auto hidden = static_cast<std::size_t>(ck.tensors.at("meta")[0]);
    Rng dummy(0);
    EmotionClassifier c;
    c.mlp = Mlp<float>::make({kLandmarkFlat, hidden, kEmotionCount},
                             {Activation::ReLU, Activation::Identity}, dummy);
    for (std::size_t i = 0; i < c.mlp.layers.size(); ++i) {
        c.mlp.layers[i].w = ck.tensors.at("cls" + std::to_string(i) + ".w");
        c.mlp.layers[i].b = ck.tensors.at("cls" + std::to_string(i) + ".b");
    }
    c.trained = true;
    return c;
}

// ---------------------------------------------------------------------------
// Dataset persistence.

inline void save_dataset(const std::vector<SyntheticClip>& dataset,
                         const GeneratorConfig& gcfg, const std::string& dir) {
    fs::create_directories(dir);
    gcfg.write(dir + "/generator.cfg");
    std::ofstream idx(dir + "/index.txt");
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const std::string stem = dir + "/clip" + std::to_string(i);
        save_audio(dataset[i].audio, stem + ".aud");
        save_landmarks(dataset[i].neutral, stem + ".neutral.lmk");
        save_landmarks(dataset[i].emotional, stem + ".emotional.lmk");
        idx << i << "\t" << emogene::to_string(dataset[i].label) << "\n";
    }
}

inline std::vector<SyntheticClip> load_dataset(const std::string& dir) {
    std::ifstream idx(dir + "/index.txt");
    if (!idx)
        throw IoError(IoCode::OpenFailed,
                      "no dataset at " + dir + " (run `gen-data` first)");
    std::vector<SyntheticClip> out;
    std::size_t i;
    std::string label;
    while (idx >> i >> label) {
        SyntheticClip clip;
        const std::string stem = dir + "/clip" + std::to_string(i);
        clip.audio = load_audio(stem + ".aud");
        clip.neutral = load_landmarks(stem + ".neutral.lmk");
        clip.emotional = load_landmarks(stem + ".emotional.lmk");
        const auto e = parse_emotion(label);
        if (!e) throw ConfigError("unknown emotion in dataset index: " + label);
        clip.label = *e;
        out.push_back(std::move(clip));
    }
    return out;
}

// NeRF training frames: procedural GT renders of a clip's emotional
// landmarks under a moving pose trace.
inline std::vector<NerfFrame> make_nerf_frames(const SyntheticClip& clip,
                                               const PipelineConfig& cfg) {
    const Camera camera = make_camera(cfg.render_size, cfg.render_size);
    const PoseTensor poses = generate_pose_trace(cfg.seed, clip.emotional.frames());
    SceneParams scene;
    std::vector<NerfFrame> frames;
    const std::size_t stride =
        std::max<std::size_t>(1, clip.emotional.frames() / cfg.n_render_frames);
    for (std::size_t i = 0; i < cfg.n_render_frames; ++i) {
        const std::size_t f = std::min(i * stride, clip.emotional.frames() - 1);
        NerfFrame frame;
        frame.lmk_flat = clip.emotional.frame_flat(f);
        for (std::size_t k = 0; k < kPoseDim; ++k) frame.pose[k] = poses.row(f)[k];
        frame.image = render_gt_frame(scene, camera, frame.lmk_flat, frame.pose.data());
        frames.push_back(std::move(frame));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Stage drivers.

inline void run_gen_data(const PipelineConfig& cfg) {
    const GeneratorConfig gcfg = GeneratorConfig::defaults();
    const auto dataset =
        generate_synthetic_dataset(cfg.seed, cfg.n_clips, cfg.frames_per_clip, gcfg);
    save_dataset(dataset, gcfg, cfg.dataset_dir);
}

inline void write_loss_curve(const std::vector<float>& curve, const std::string& path) {
    std::ofstream os(path);
    for (std::size_t i = 0; i < curve.size(); ++i) os << i << "\t" << curve[i] << "\n";
}

inline void require_improved(const std::vector<float>& curve, const std::string& stage) {
    if (curve.size() < 2) throw Error(stage + ": empty loss curve");
    // compare first and last few steps to smooth stochastic batches
    const std::size_t k = std::min<std::size_t>(10, curve.size() / 2);
    double first = 0, last = 0;
    for (std::size_t i = 0; i < k; ++i) {
        first += curve[i];
        last += curve[curve.size() - 1 - i];
    }
    if (!(last < first)) throw Error(stage + ": final loss did not improve");
}

inline void run_train_proxies(const PipelineConfig& cfg) {
    const auto dataset = load_dataset(cfg.dataset_dir);
    fs::create_directories(cfg.checkpoint_dir);
    auto sync = train_sync_proxy(dataset, cfg.sync, cfg.seed);
    auto ck = pack_sync(sync, cfg.seed);
    save_checkpoint(ck, cfg.checkpoint_dir + "/sync.egck");
    auto cls = train_emotion_classifier(dataset, cfg.classifier, cfg.seed);
    auto ck2 = pack_classifier(cls, cfg.seed);
    save_checkpoint(ck2, cfg.checkpoint_dir + "/classifier.egck");
}

inline void run_train_a2m(const PipelineConfig& cfg) {
    const auto dataset = load_dataset(cfg.dataset_dir);
    fs::create_directories(cfg.checkpoint_dir);
    const SyncScorer* sync_ptr = nullptr;
    SyncScorer sync;
    const std::string sync_path = cfg.checkpoint_dir + "/sync.egck";
    if (fs::exists(sync_path)) {
        sync = unpack_sync(load_checkpoint(sync_path));
        sync_ptr = &sync;
    }
    auto res = train_a2m(dataset, cfg.a2m, cfg.seed, sync_ptr);
    std::vector<float> totals;
    for (const auto& l : res.loss_curve) totals.push_back(l.total);
    require_improved(totals, "train-a2m");
    auto ck = pack_vae(res.vae, cfg.seed);
    save_checkpoint(ck, cfg.checkpoint_dir + "/a2m.egck");
    write_loss_curve(totals, cfg.checkpoint_dir + "/a2m.loss.tsv");
}

inline void run_train_ldm(const PipelineConfig& cfg) {
    const auto dataset = load_dataset(cfg.dataset_dir);
    fs::create_directories(cfg.checkpoint_dir);
    auto res = train_ldm(dataset, cfg.ldm, cfg.seed);
    require_improved(res.loss_curve, "train-ldm");
    auto ck = pack_ldm(res, cfg.seed);
    save_checkpoint(ck, cfg.checkpoint_dir + "/ldm.egck");
    write_loss_curve(res.loss_curve, cfg.checkpoint_dir + "/ldm.loss.tsv");
}

inline void run_train_nerf(const PipelineConfig& cfg) {
    const auto dataset = load_dataset(cfg.dataset_dir);
    fs::create_directories(cfg.checkpoint_dir);
    const auto frames = make_nerf_frames(dataset.at(0), cfg);
    auto res = train_nerf(frames, cfg.nerf, cfg.seed);
    require_improved(res.loss_curve, "train-nerf");
    auto ck = pack_nerf(res.model, cfg.seed);
    save_checkpoint(ck, cfg.checkpoint_dir + "/nerf.egck");
    write_loss_curve(res.loss_curve, cfg.checkpoint_dir + "/nerf.loss.tsv");
}

inline void run_train_all(const PipelineConfig& cfg) {
    run_train_proxies(cfg);
    run_train_a2m(cfg);
    run_train_ldm(cfg);
    run_train_nerf(cfg);
}

struct InferResult {
    std::size_t frames_written = 0;
    bool idle_path_taken = false;
    MetricReport report;
};

inline Checkpoint load_stage_checkpoint(const std::string& dir, const std::string& stage) {
    const std::string path = dir + "/" + stage + ".egck";
    if (!fs::exists(path))
        throw IoError(IoCode::OpenFailed,
                      "missing checkpoint for stage '" + stage + "': " + path);
    return load_checkpoint(path);
}

inline InferResult run_infer(const PipelineConfig& cfg, const std::string& audio_path,
                             EmotionLabel emotion) {
    const AudioFeatureSequence audio = load_audio(audio_path);
    const Vae<float> vae = unpack_vae(load_stage_checkpoint(cfg.checkpoint_dir, "a2m"));
    const NerfModel nerf = unpack_nerf(load_stage_checkpoint(cfg.checkpoint_dir, "nerf"));

    // audio-to-motion (decoder only)
    Rng zrng(cfg.seed, "infer-z");
    Tensor<float> z({vae.latent_dim});
    for (auto& v : z.data) v = static_cast<float>(zrng.gaussian());
    const LandmarkSequence neutral = decode_landmarks(vae, z, audio);

    // motion-to-emotion
    LandmarkSequence emotional = neutral;
    if (!cfg.no_ldm) {
        auto ldm = unpack_ldm(load_stage_checkpoint(cfg.checkpoint_dir, "ldm"));
        emotional = apply_ldm(ldm.ldm, ldm.embedder, neutral, emotion);
    }

    // idle-state pose sampling
    PoseTensor poses = generate_pose_trace(cfg.seed, audio.frames());
    SamplerConfig idle_cfg = cfg.idle;
    idle_cfg.seed = cfg.seed;
    InferResult result;
    poses = idle_pipeline(poses, audio, idle_cfg, &result.idle_path_taken);

    // emotion-to-video
    fs::create_directories(cfg.output_dir);
    const Camera camera = make_camera(cfg.render_size, cfg.render_size);
    RenderConfig rc;
    rc.n_samples = 128;
    rc.seed = 0;  // midpoint rule: deterministic inference
    SceneParams scene;
    double ssim_acc = 0, mse_acc = 0;
    for (std::size_t f = 0; f < emotional.frames(); ++f) {
        const Tensor<float> lmk = emotional.frame_flat(f);
        const Image img =
            render_frame(nerf.head, &nerf.torso, camera, lmk, poses.row(f), rc);
        char name[32];
        std::snprintf(name, sizeof(name), "frame%04zu", f);
        save_ppm(img, cfg.output_dir + "/" + name + ".ppm");
        save_imf(img, cfg.output_dir + "/" + name + ".imf");
        const Image gt = render_gt_frame(scene, camera, lmk, poses.row(f));
        ssim_acc += ssim(img, gt);
        mse_acc += mse(img, gt);
        ++result.frames_written;
    }
    save_landmarks(emotional, cfg.output_dir + "/landmarks.lmk");
    save_poses(poses, cfg.output_dir + "/poses.pos");
    result.report.ssim = ssim_acc / static_cast<double>(emotional.frames());
    const double m = mse_acc / static_cast<double>(emotional.frames());
    result.report.psnr = m == 0 ? MetricReport::infinite() : 10.0 * std::log10(1.0 / m);
    result.report.motion = motion_stats(poses);
    const std::string cls_path = cfg.checkpoint_dir + "/classifier.egck";
    if (fs::exists(cls_path)) {
        auto cls = unpack_classifier(load_checkpoint(cls_path));
        result.report.emotion_score = emotion_score(cls, emotional, emotion);
    }
    write_pipeline_config(cfg, cfg.output_dir + "/resolved.cfg");
    return result;
}

// Frame-directory evaluation: pairs frames by name, emits a per-frame
// tab-separated report plus a key=value summary.
inline MetricReport run_eval(const std::string& gen_dir, const std::string& ref_dir,
                             const std::string& report_path = "") {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(gen_dir))
        if (e.path().extension() == ".imf") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw IoError(IoCode::OpenFailed, "no .imf frames in " + gen_dir);

    std::ostringstream lines;
    double ssim_acc = 0, mse_acc = 0;
    for (const auto& n : names) {
        const Image a = load_imf(gen_dir + "/" + n + ".imf");
        const Image b = load_imf(ref_dir + "/" + n + ".imf");
        const double s = ssim(a, b);
        const double m = mse(a, b);
        ssim_acc += s;
        mse_acc += m;
        lines << n << "\t" << std::setprecision(6) << s << "\t"
              << (m == 0 ? std::string("inf")
                         : std::to_string(10.0 * std::log10(1.0 / m)))
              << "\n";
    }
    MetricReport report;
    report.ssim = ssim_acc / static_cast<double>(names.size());
    const double m = mse_acc / static_cast<double>(names.size());
    report.psnr = m == 0 ? MetricReport::infinite() : 10.0 * std::log10(1.0 / m);
    // landmark distance when both directories carry landmark files
    if (fs::exists(gen_dir + "/landmarks.lmk") && fs::exists(ref_dir + "/landmarks.lmk")) {
        const auto a = load_landmarks(gen_dir + "/landmarks.lmk");
        const auto b = load_landmarks(ref_dir + "/landmarks.lmk");
        std::tie(report.m_lmd, report.f_lmd) = lmd(a, b);
    }
    if (!report_path.empty()) {
        std::ofstream os(report_path);
        os << "# frame\tssim\tpsnr_db (ssim window " << kSsimWindow << "x"
           << kSsimWindow << " uniform; emotion_score is an in-repo proxy)\n";
        os << lines.str();
        os << "summary.ssim = " << report.ssim << "\n";
        if (std::isinf(report.psnr)) os << "summary.psnr = inf\n";
        else os << "summary.psnr = " << report.psnr << "\n";
        os << "summary.m_lmd = " << report.m_lmd << "\n";
        os << "summary.f_lmd = " << report.f_lmd << "\n";
    }
    return report;
}

}  // namespace emogene
