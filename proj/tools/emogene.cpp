// Command-line front end for the emogene pipeline.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "emogene/pipeline.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string dataset_dir, checkpoint_dir, output_dir;
};

emogene::PipelineConfig resolve_config(const CliOverrides& o) {
    emogene::PipelineConfig cfg;
    if (!o.config_path.empty()) cfg = emogene::load_pipeline_config(o.config_path);
    if (o.seed_set) cfg.seed = o.seed;
    if (!o.dataset_dir.empty()) cfg.dataset_dir = o.dataset_dir;
    if (!o.checkpoint_dir.empty()) cfg.checkpoint_dir = o.checkpoint_dir;
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    return cfg;
}

void add_common(CLI::App* app, CliOverrides& o) {
    app->add_option("--config", o.config_path, "key = value config file");
    app->add_option("--seed", o.seed, "override global seed")
        ->each([&](const std::string&) { o.seed_set = true; });
    app->add_option("--data-dir", o.dataset_dir);
    app->add_option("--checkpoint-dir", o.checkpoint_dir);
    app->add_option("--out-dir", o.output_dir);
}

void print_report(const emogene::MetricReport& r) {
    std::printf("ssim = %.6f\n", r.ssim);
    if (std::isinf(r.psnr)) std::printf("psnr = inf\n");
    else std::printf("psnr = %.4f\n", r.psnr);
    std::printf("m_lmd = %.6f\nf_lmd = %.6f\n", r.m_lmd, r.f_lmd);
    std::printf("emotion_score = %.6f\n", r.emotion_score);
    std::printf("vel_avg = %.6f\nvel_std = %.6f\nacc_avg = %.6f\nacc_std = %.6f\n",
                r.motion.vel_avg, r.motion.vel_std, r.motion.acc_avg, r.motion.acc_std);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emogene: emotional talking-head pipeline"};
    app.require_subcommand(1);
    CliOverrides o;

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
    add_common(gen, o);

    auto* tpx = app.add_subcommand("train-proxies", "train sync scorer and emotion classifier");
    add_common(tpx, o);
    auto* ta2m = app.add_subcommand("train-a2m", "train the audio-to-motion VAE");
    add_common(ta2m, o);
    auto* tldm = app.add_subcommand("train-ldm", "train the landmark deformation model");
    add_common(tldm, o);
    auto* tnerf = app.add_subcommand("train-nerf", "train the head/torso fields");
    add_common(tnerf, o);
    auto* tall = app.add_subcommand("train-all", "run every training stage in order");
    add_common(tall, o);

    auto* infer = app.add_subcommand("infer", "audio + emotion -> rendered frames");
    add_common(infer, o);
    std::string audio_path, emotion_name = "neutral";
    bool no_ldm = false;
    infer->add_option("--audio", audio_path, "input .aud feature file")->required();
    infer->add_option("--emotion", emotion_name, "target emotion label");
    infer->add_flag("--no-ldm", no_ldm, "skip the deformation stage (ablation)");

    auto* idle = app.add_subcommand("idle-sample", "run the idle-pose sampler on a pose file");
    std::string poses_path, idle_audio_path, idle_out;
    std::size_t gap = 2, len_min_opt = 0, len_max_opt = 0;
    std::uint64_t idle_seed = 42;
    idle->add_option("--poses", poses_path)->required();
    idle->add_option("--audio", idle_audio_path)->required();
    idle->add_option("--gap", gap);
    idle->add_option("--seed", idle_seed);
    idle->add_option("--len-min", len_min_opt);
    idle->add_option("--len-max", len_max_opt);
    idle->add_option("--out", idle_out, "output .pos path");

    auto* eval = app.add_subcommand("eval", "compare two frame directories");
    std::string gen_dir, ref_dir, report_path;
    eval->add_option("--gen", gen_dir)->required();
    eval->add_option("--ref", ref_dir)->required();
    eval->add_option("--report", report_path, "write the per-frame report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            emogene::run_gen_data(resolve_config(o));
        } else if (*tpx) {
            emogene::run_train_proxies(resolve_config(o));
        } else if (*ta2m) {
            emogene::run_train_a2m(resolve_config(o));
        } else if (*tldm) {
            emogene::run_train_ldm(resolve_config(o));
        } else if (*tnerf) {
            emogene::run_train_nerf(resolve_config(o));
        } else if (*tall) {
            emogene::run_train_all(resolve_config(o));
        } else if (*infer) {
            auto cfg = resolve_config(o);
            cfg.no_ldm = cfg.no_ldm || no_ldm;
            const auto label = emogene::parse_emotion(emotion_name);
            if (!label) throw emogene::ConfigError("unknown emotion: " + emotion_name);
            const auto res = emogene::run_infer(cfg, audio_path, *label);
            std::printf("frames_written = %zu\n", res.frames_written);
            std::printf("idle_path = %d\n", res.idle_path_taken ? 1 : 0);
            print_report(res.report);
        } else if (*idle) {
            const auto poses = emogene::load_poses(poses_path);
            const auto audio = emogene::load_audio(idle_audio_path);
            emogene::SamplerConfig cfg;
            cfg.len_gap = gap;
            cfg.seed = idle_seed;
            if (len_min_opt) cfg.default_len_min = len_min_opt;
            if (len_max_opt) cfg.default_len_max = len_max_opt;
            bool taken = false;
            const auto out = emogene::idle_pipeline(poses, audio, cfg, &taken);
            std::printf("idle_path = %d\n", taken ? 1 : 0);
            if (!idle_out.empty()) emogene::save_poses(out, idle_out);
        } else if (*eval) {
            print_report(emogene::run_eval(gen_dir, ref_dir, report_path));
        }
    } catch (const emogene::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const emogene::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 4;
    } catch (const emogene::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const emogene::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
