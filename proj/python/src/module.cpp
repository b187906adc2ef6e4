#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "peavs/analysis.hpp"
#include "peavs/datakit.hpp"
#include "peavs/distort.hpp"
#include "peavs/features.hpp"
#include "peavs/frechet.hpp"
#include "peavs/net/model.hpp"
#include "peavs/synth.hpp"

namespace py = pybind11;
using namespace peavs;

namespace {

struct PyClip {
  media::ClipBundle bundle;
};

media::ClipBundle distorted(const PyClip& clip, int kind, int level, std::uint64_t seed) {
  const auto k = distort::kind_from_id(kind);
  const auto levels = distort::catalog_levels(k);
  if (level < 1 || level > distort::kLevelCount) throw Error(Errc::LevelOutOfCatalog, "level index " + std::to_string(level));
  return distort::apply_distortion(clip.bundle, {k, levels[static_cast<std::size_t>(level - 1)], seed, distort::kDefaultGapProbability});
}

std::pair<Eigen::MatrixXf, Eigen::MatrixXf> to_arrays(const features::EmbeddingPair& p) { return {p.audio.rows, p.video.rows}; }

features::EmbeddingPair from_arrays(const Eigen::MatrixXf& audio, const Eigen::MatrixXf& video) {
  features::EmbeddingPair p;
  p.audio.modality = features::Modality::Audio;
  p.audio.rows = audio;
  p.video.modality = features::Modality::Video;
  p.video.rows = video;
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the peavs core library";

  py::register_exception<Error>(m, "PeavsError", PyExc_ValueError);

  py::class_<PyClip>(m, "Clip")
      .def_property_readonly("clip_id", [](const PyClip& c) { return c.bundle.clip_id; })
      .def_property_readonly("sample_rate", [](const PyClip& c) { return c.bundle.audio.sample_rate; })
      .def_property_readonly("frame_count", [](const PyClip& c) { return c.bundle.video.frames.size(); })
      .def_property_readonly("audio_seconds", [](const PyClip& c) { return c.bundle.audio.duration_seconds(); })
      .def_property_readonly("video_seconds", [](const PyClip& c) { return c.bundle.video.duration_seconds(); })
      .def("audio", [](const PyClip& c) { return c.bundle.audio.samples; })
      .def("distort", [](const PyClip& c, int kind, int level, std::uint64_t seed) { return PyClip{distorted(c, kind, level, seed)}; },
           py::arg("kind"), py::arg("level"), py::arg("seed") = 0, "Apply catalog distortion kind 1..9 at level index 1..10.")
      .def("save", [](const PyClip& c, const std::filesystem::path& dir) { media::save_bundle(c.bundle, dir); })
      .def_static("load", [](const std::filesystem::path& dir) { return PyClip{media::load_bundle(dir)}; });

  m.def(
      "make_clip",
      [](const std::string& clip_id, std::uint64_t seed, double seconds) {
        synth::ClipSpec spec;
        spec.duration_seconds = seconds;
        return PyClip{synth::make_clip(clip_id, seed, spec)};
      },
      py::arg("clip_id"), py::arg("seed"), py::arg("seconds") = 10.0);

  m.def("kind_names", [] {
    std::vector<std::string> out;
    for (auto k : distort::all_kinds()) out.emplace_back(distort::kind_name(k));
    return out;
  });

  m.def(
      "extract_features",
      [](const PyClip& clip, int audio_dim, int video_dim) {
        features::ExtractorConfig cfg;
        cfg.audio_dim = audio_dim;
        cfg.video_dim = video_dim;
        return to_arrays(features::extract_features(clip.bundle, cfg));
      },
      py::arg("clip"), py::arg("audio_dim") = 128, py::arg("video_dim") = 1024,
      "Return (audio, video) per-window embeddings as float32 arrays.");

  m.def("read_embeddings", [](const std::filesystem::path& path) { return Eigen::MatrixXf(features::read_embeddings(path).rows); });

  m.def(
      "frechet_distance",
      [](const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& sigma_a, const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& sigma_b) {
        return frechet::frechet_distance({mu_a, sigma_a, 0}, {mu_b, sigma_b, 0});
      },
      py::arg("mu_a"), py::arg("sigma_a"), py::arg("mu_b"), py::arg("sigma_b"));

  m.def(
      "favd_score",
      [](const std::vector<std::pair<Eigen::MatrixXf, Eigen::MatrixXf>>& eval,
         const std::vector<std::pair<Eigen::MatrixXf, Eigen::MatrixXf>>& ref, const std::string& variant) {
        std::vector<features::EmbeddingPair> e, r;
        for (const auto& [a, v] : eval) e.push_back(from_arrays(a, v));
        for (const auto& [a, v] : ref) r.push_back(from_arrays(a, v));
        return frechet::favd_score(e, r, frechet::variant_from_name(variant));
      },
      py::arg("eval"), py::arg("reference"), py::arg("variant") = "favd",
      "Sets are lists of (audio, video) arrays as returned by extract_features.");

  m.def(
      "predict_score",
      [](const std::filesystem::path& ckpt, const Eigen::MatrixXf& audio, const Eigen::MatrixXf& video) {
        return net::predict_score(from_arrays(audio, video), net::load_checkpoint(ckpt));
      },
      py::arg("checkpoint"), py::arg("audio"), py::arg("video"));

  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return analysis::pearson(x, y); });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return analysis::spearman(x, y); });
  m.def("krippendorff_alpha", [](const std::vector<std::vector<double>>& units) { return analysis::krippendorff_alpha(units); });
  m.def("bin_score", &analysis::bin_score);
  m.def(
      "binary_sync_accuracy",
      [](long tp, long fn, long fp, long tn) { return analysis::binary_sync_eval(analysis::ConfusionMatrix{tp, fn, fp, tn}).accuracy; },
      py::arg("tp"), py::arg("fn"), py::arg("fp"), py::arg("tn"));
  m.def("classify_disagreement", [](const std::vector<int>& scores) {
    return std::string(datakit::disagreement_name(datakit::classify_disagreement(scores)));
  });
}
