#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "instrec/audio_io.hpp"
#include "instrec/dataset.hpp"
#include "instrec/eval.hpp"

using namespace instrec;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<std::string> kCodes{"flu", "pia", "tru", "gac", "voi", "org"};

/// Three short clips per class; each class is a different tone plus a little noise.
fs::path make_wav_tree(const std::string& name, std::size_t samples = 22050) {
  const fs::path root = fixture::temp_dir(name);
  Rng rng(7);
  for (std::size_t c = 0; c < kCodes.size(); ++c) {
    fs::create_directories(root / kCodes[c]);
    for (int i = 0; i < 3; ++i) {
      auto s = fixture::sine(220.0 * static_cast<double>(c + 1), samples, 0.5);
      for (double& v : s) v += 0.01 * (rng.uniform() - 0.5);
      write_wav(root / kCodes[c] / ("clip" + std::to_string(i) + ".wav"), make_clip(s));
    }
  }
  return root;
}

fs::path write_blob_csv(const fs::path& dir, std::size_t per_class = 30, double separation = 6.0) {
  LabeledDataset ds = fixture::blobs(per_class, 6, 17, separation, 11);
  ds.class_names = kCodes;
  const fs::path path = dir / "blobs.csv";
  std::ofstream out(path);
  write_feature_csv(out, ds);
  return path;
}

double reported_accuracy(const std::string& text) {
  const auto pos = text.find("accuracy: ");
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + 10));
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"train", "--help"}).code == 0);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"train", "--features"}).code == 1);
}

TEST_CASE("extract") {
  const fs::path root = make_wav_tree("cli_extract");
  const fs::path out_dir = fixture::temp_dir("cli_extract_out");
  const RunResult a = run({"extract", "--root", root.string(), "--out", (out_dir / "a.csv").string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("extracted 18 clips") != std::string::npos);
  const RunResult b = run({"extract", "--root", root.string(), "--out", (out_dir / "b.csv").string(), "--jobs", "3"});
  REQUIRE(b.code == 0);
  CHECK(slurp(out_dir / "a.csv") == slurp(out_dir / "b.csv"));

  const LabeledDataset ds = read_feature_csv(out_dir / "a.csv");
  CHECK(ds.size() == 18);
  CHECK(ds.features.cols() == 17);
  CHECK(ds.class_names == kCodes);
  CHECK(ds.paths[0] == "flu/clip0.wav");
  CHECK(slurp(out_dir / "a.csv").find("# command=extract\n") != std::string::npos);

  const RunResult subset = run({"extract", "--root", root.string(), "--out", (out_dir / "c.csv").string(),
                                "--classes", "pia,flu"});
  REQUIRE(subset.code == 0);
  CHECK(read_feature_csv(out_dir / "c.csv").class_names == std::vector<std::string>{"pia", "flu"});
}

TEST_CASE("extract failures map to exit codes") {
  const fs::path root = make_wav_tree("cli_extract_bad", 4096);
  const fs::path out = fixture::temp_dir("cli_extract_bad_out") / "f.csv";

  fs::create_directories(root / "empty");
  CHECK(run({"extract", "--root", root.string(), "--out", out.string(), "--classes", "flu,empty"}).code == 2);
  CHECK(run({"extract", "--root", root.string(), "--out", out.string(), "--classes", "flu,nope"}).code == 2);

  std::ofstream(root / "pia" / "broken.wav", std::ios::binary) << "RIFF....WAVEjunk";
  const RunResult r = run({"extract", "--root", root.string(), "--out", out.string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("broken.wav") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("train, predict and schema errors") {
  const fs::path dir = fixture::temp_dir("cli_train");
  const fs::path csv = write_blob_csv(dir);
  const RunResult a = run({"train", "--features", csv.string(), "--out", (dir / "a.json").string()});
  REQUIRE(a.code == 0);
  CHECK(reported_accuracy(a.out) >= 0.95);
  CHECK(a.out.find("Flute") != std::string::npos);
  const RunResult b = run({"train", "--features", csv.string(), "--out", (dir / "b.json").string()});
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(a.err.find("model = svm\n") != std::string::npos);

  for (const std::string model : {"logistic", "tree", "forest", "lgbm", "xgboost"}) {
    CAPTURE(model);
    const RunResult m = run({"train", "--features", csv.string(), "--out", (dir / (model + ".json")).string(),
                             "--model", model, "--seed", "3"});
    CHECK(m.code == 0);
  }

  CHECK(run({"train", "--features", csv.string(), "--out", (dir / "x.json").string(), "--model", "svm",
             "--trees", "10"})
            .code == 1);
  CHECK(run({"train", "--features", csv.string(), "--out", (dir / "x.json").string(), "--c", "-1"}).code == 5);
  CHECK(run({"train", "--features", csv.string(), "--out", (dir / "x.json").string(), "--model", "bogus"}).code ==
        1);

  std::ofstream(dir / "short.csv") << "path,label,mfcc_0\nx.wav,flu,1\n";
  CHECK(run({"train", "--features", (dir / "short.csv").string(), "--out", (dir / "x.json").string()}).code == 4);
  CHECK(run({"train", "--features", (dir / "missing.csv").string(), "--out", (dir / "x.json").string()}).code != 0);

  std::string broken = slurp(dir / "a.json");
  broken.resize(broken.size() / 2);
  std::ofstream(dir / "broken.json") << broken;
  const fs::path wav = dir / "tone.wav";
  write_wav(wav, make_clip(fixture::sine(440.0, 22050, 0.5)));
  CHECK(run({"predict", "--model", (dir / "broken.json").string(), "--wav", wav.string()}).code == 4);
}

TEST_CASE("predict on extracted tones") {
  const fs::path root = make_wav_tree("cli_predict");
  const fs::path dir = fixture::temp_dir("cli_predict_out");
  REQUIRE(run({"extract", "--root", root.string(), "--out", (dir / "f.csv").string()}).code == 0);
  REQUIRE(run({"train", "--features", (dir / "f.csv").string(), "--out", (dir / "tree.json").string(), "--model",
               "tree"})
              .code == 0);
  const fs::path flute = dir / "flute.wav";
  Rng rng(99);
  auto tone = fixture::sine(220.0, 22050, 0.5);
  for (double& v : tone) v += 0.01 * (rng.uniform() - 0.5);
  write_wav(flute, make_clip(tone));
  const RunResult r = run({"predict", "--model", (dir / "tree.json").string(), "--wav", flute.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("Flute\n", 0) == 0);
  CHECK(r.out.find("  voi ") != std::string::npos);

  CHECK(run({"predict", "--model", (dir / "tree.json").string(), "--wav", (dir / "none.wav").string()}).code == 3);
  std::ofstream(dir / "bad.wav") << "garbage";
  CHECK(run({"predict", "--model", (dir / "tree.json").string(), "--wav", (dir / "bad.wav").string()}).code == 3);
}

TEST_CASE("crossval") {
  const fs::path dir = fixture::temp_dir("cli_cv");
  const fs::path csv = write_blob_csv(dir);
  const RunResult r = run({"crossval", "--features", csv.string(), "--model", "tree"});
  REQUIRE(r.code == 0);
  for (int f = 1; f <= 10; ++f) CHECK(r.out.find("fold " + std::to_string(f) + ": ") != std::string::npos);
  CHECK(r.out.find("fold 11") == std::string::npos);
  CHECK(r.out.find("mean accuracy: ") != std::string::npos);
  const RunResult again = run({"crossval", "--features", csv.string(), "--model", "tree", "--jobs", "4"});
  CHECK(again.out == r.out);
  CHECK(run({"crossval", "--features", csv.string(), "--folds", "1000"}).code == 5);
}

TEST_CASE("cluster") {
  const fs::path dir = fixture::temp_dir("cli_cluster");
  // features are standardized before clustering, so the blobs need a wide margin
  const fs::path csv = write_blob_csv(dir, 30, 10.0);
  const RunResult h = run({"cluster", "--features", csv.string(), "--out-dir", (dir / "h").string()});
  REQUIRE(h.code == 0);
  CHECK(h.out.find("clusters: 30\n") != std::string::npos);
  CHECK(fs::exists(dir / "h" / "assignments.csv"));
  CHECK(slurp(dir / "h" / "dendrogram.csv").find("merge_index,a,b,height,size\n") != std::string::npos);

  const RunResult k = run({"cluster", "--features", csv.string(), "--out-dir", (dir / "k").string(), "--method",
                           "kmeans"});
  REQUIRE(k.code == 0);
  CHECK(k.out.find("clusters: 6\n") != std::string::npos);
  CHECK(k.out.find("purity: 1\n") != std::string::npos);

  const RunResult two = run({"cluster", "--features", csv.string(), "--out-dir", (dir / "two").string(),
                             "--method", "kmeans", "--classes", "flu,pia"});
  REQUIRE(two.code == 0);
  CHECK(two.out.find("clusters: 2\n") != std::string::npos);
  CHECK(two.out.find("purity: 1\n") != std::string::npos);

  CHECK(run({"cluster", "--features", csv.string(), "--out-dir", (dir / "x").string(), "--cut", "1000"}).code == 5);
  CHECK(run({"cluster", "--features", csv.string(), "--out-dir", (dir / "x").string(), "--method", "dbscan"})
            .code == 1);
}

TEST_CASE("spectrogram images") {
  const fs::path dir = fixture::temp_dir("cli_spec");
  write_wav(dir / "tone.wav", make_clip(fixture::sine(1000.0, 132300, 0.5)));
  const RunResult r = run({"spectrogram", "--wav", (dir / "tone.wav").string(), "--out", (dir / "a.pgm").string()});
  REQUIRE(r.code == 0);
  const std::string img = slurp(dir / "a.pgm");
  CHECK(img.rfind("P5\n259 513\n255\n", 0) == 0);
  CHECK(img.size() == std::string("P5\n259 513\n255\n").size() + 259 * 513);
  REQUIRE(run({"spectrogram", "--wav", (dir / "tone.wav").string(), "--out", (dir / "b.pgm").string()}).code == 0);
  CHECK(slurp(dir / "b.pgm") == img);

  write_wav(dir / "silence.wav", make_clip(std::vector<double>(44100, 0.0)));
  REQUIRE(run({"spectrogram", "--wav", (dir / "silence.wav").string(), "--out", (dir / "s.pgm").string()}).code ==
          0);
  const std::string quiet = slurp(dir / "s.pgm");
  const std::string header = "P5\n87 513\n255\n";
  REQUIRE(quiet.rfind(header, 0) == 0);
  const std::string pixels = quiet.substr(header.size());
  CHECK(pixels == std::string(pixels.size(), '\0'));
}

TEST_CASE("evaluate writes every report") {
  const fs::path dir = fixture::temp_dir("cli_eval");
  const fs::path csv = write_blob_csv(dir, 20);
  const std::vector<std::string> base{"evaluate", "--features", csv.string(), "--models", "logistic,tree,svm"};
  auto with_out = [&](const std::string& sub) {
    auto args = base;
    args.insert(args.end(), {"--out-dir", (dir / sub).string()});
    return run(args);
  };
  const RunResult a = with_out("a");
  REQUIRE(a.code == 0);
  const RunResult b = with_out("b");
  REQUIRE(b.code == 0);
  for (const std::string file :
       {"per_class_metrics.csv", "model_accuracy.csv", "confusion_logistic.csv", "confusion_tree.csv",
        "confusion_svm.csv", "confusion_svm.ppm", "boxplot_precision.csv", "boxplot_recall.csv", "boxplot_f1.csv"}) {
    CAPTURE(file);
    REQUIRE(fs::exists(dir / "a" / file));
    CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));
  }
  std::ifstream per_class(dir / "a" / "per_class_metrics.csv");
  CHECK(read_per_class_metrics_csv(per_class).size() == 18);
  CHECK(slurp(dir / "a" / "confusion_svm.ppm").rfind("P6\n", 0) == 0);
}
