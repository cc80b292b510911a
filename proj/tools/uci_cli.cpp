#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uci/clustering.hpp"
#include "uci/identity.hpp"
#include "uci/image_io.hpp"
#include "uci/metrics.hpp"
#include "uci/synth.hpp"
#include "uci/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string out = "uci-out";
  std::uint64_t seed = 42;
  double alpha = 0.10;
  double beta = 0.05;
  int lambda = 3;
  int gamma = 2;
  double tau = 0.2;
  std::string scheme = "uci";
  std::string crop = "256x256";
  int workers = 0;

  // synth
  std::string protocol = "offline1";
  int cameras = 11;
  int individuals = 12;
  int images = 40;
  int reposts = 5;
  std::string sigma_k;  // "x" or "lo:hi"; empty keeps the protocol preset
  double sigma_eta = -1.0;
  std::string dims = "128x128";
  std::string split;  // balanced | asymmetric; empty keeps the preset

  // extract / match / eval inputs
  std::string input;
  std::string manifest_path;
  std::string scores_path;
  std::string clusters_dir;
};

uci::Dims parse_dims(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw uci::ConfigError("expected WxH, got: " + s);
  try {
    const int w = std::stoi(s.substr(0, x));
    const int h = std::stoi(s.substr(x + 1));
    return {w, h};
  } catch (const std::exception&) {
    throw uci::ConfigError("expected WxH, got: " + s);
  }
}

std::pair<double, double> parse_range(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      const double v = std::stod(s);
      return {v, v};
    }
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw uci::ConfigError("expected a number or lo:hi, got: " + s);
  }
}

uci::RunParams run_params(const Options& opt) {
  uci::RunParams p;
  p.cluster.alpha = opt.alpha;
  p.cluster.beta = opt.beta;
  p.cluster.min_group_size = opt.lambda;
  p.gamma = opt.gamma;
  p.denoiser.crop = parse_dims(opt.crop);
  p.workers = opt.workers;
  p.cluster.validate();
  p.denoiser.validate();
  if (opt.gamma < 2) throw uci::ConfigError("gamma must be >= 2");
  return p;
}

void write_run_record(const Options& opt, const std::string& command) {
  json j;
  j["command"] = command;
  j["version"] = uci::kLibraryVersion;
  j["seed"] = opt.seed;
  j["alpha"] = opt.alpha;
  j["beta"] = opt.beta;
  j["lambda"] = opt.lambda;
  j["gamma"] = opt.gamma;
  j["tau"] = opt.tau;
  j["scheme"] = opt.scheme;
  j["crop"] = opt.crop;
  j["workers"] = opt.workers;
  if (command == "synth") {
    j["protocol"] = opt.protocol;
    j["cameras"] = opt.cameras;
    j["individuals"] = opt.individuals;
    j["images"] = opt.images;
    j["reposts"] = opt.reposts;
    j["sigma_k"] = opt.sigma_k;
    j["sigma_eta"] = opt.sigma_eta;
    j["dims"] = opt.dims;
    j["split"] = opt.split;
  }
  if (!opt.input.empty()) j["input"] = opt.input;
  if (!opt.manifest_path.empty()) j["manifest"] = opt.manifest_path;
  if (!opt.scores_path.empty()) j["scores"] = opt.scores_path;
  if (!opt.clusters_dir.empty()) j["clusters"] = opt.clusters_dir;
  fs::create_directories(opt.out);
  std::ofstream out(fs::path(opt.out) / "run_record.json", std::ios::trunc);
  out << j.dump(2) << '\n';
}

int cmd_synth(const Options& opt) {
  uci::DatasetManifest manifest;
  if (opt.protocol == "online") {
    uci::OnlineParams p = uci::preset_online();
    p.n_individuals = opt.individuals;
    p.repost_per_user = opt.reposts;
    if (!opt.sigma_k.empty()) std::tie(p.sigma_k_min, p.sigma_k_max) = parse_range(opt.sigma_k);
    if (opt.sigma_eta >= 0.0) p.noise_sigma = opt.sigma_eta;
    p.dims = parse_dims(opt.dims);
    manifest = uci::build_online_dataset(p, opt.seed);
  } else {
    uci::OfflineParams p;
    if (opt.protocol == "offline1") p = uci::preset_offline1();
    else if (opt.protocol == "offline2") p = uci::preset_offline2();
    else if (opt.protocol == "offline3") p = uci::preset_offline3();
    else throw uci::ConfigError("unknown protocol: " + opt.protocol);
    p.n_cameras = opt.cameras;
    p.images_per_camera = opt.images;
    p.repost_per_user = opt.reposts;
    if (!opt.sigma_k.empty()) std::tie(p.sigma_k_min, p.sigma_k_max) = parse_range(opt.sigma_k);
    if (opt.sigma_eta >= 0.0) p.noise_sigma = opt.sigma_eta;
    p.dims = parse_dims(opt.dims);
    if (opt.split == "balanced") p.split = uci::SplitMode::Balanced;
    else if (opt.split == "asymmetric") p.split = uci::SplitMode::UsageAsymmetric;
    else if (!opt.split.empty()) throw uci::ConfigError("unknown split mode: " + opt.split);
    manifest = uci::build_offline_dataset(p, opt.seed);
  }
  uci::write_dataset(manifest, opt.out, opt.workers);
  write_run_record(opt, "synth");
  std::cout << "wrote " << manifest.accounts.size() << " accounts under " << opt.out << "\n";
  return 0;
}

// One account directory without a manifest: every readable netpbm file,
// sorted by name.
uci::AccountData load_plain_account(const fs::path& dir, uci::Dims crop) {
  uci::AccountData acc;
  acc.account_id = dir.filename().string();
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    acc.image_ids.push_back(f.stem().string());
    acc.images.push_back(uci::load_luminance(f, crop));
  }
  return acc;
}

void write_account_outputs(const fs::path& dir, const uci::AccountResult& res,
                           const std::vector<std::string>& image_ids,
                           const std::string& scheme) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < res.fingerprints.size(); ++i) {
    std::string n = std::to_string(i);
    while (n.size() < 3) n.insert(n.begin(), '0');
    uci::save_fingerprint(res.fingerprints[i], dir / ("fp_" + n + ".ucif"));
  }
  if (!res.clusters) return;

  const uci::ClusterResult& cr = *res.clusters;
  json j;
  j["account_id"] = res.account_id;
  j["scheme"] = scheme;
  j["image_ids"] = image_ids;
  j["groups"] = json::array();
  std::set<int> kept(cr.kept_group_indices.begin(), cr.kept_group_indices.end());
  int fp_index = 0;
  for (int gi = 0; gi < static_cast<int>(cr.groups.size()); ++gi) {
    json jg;
    std::vector<std::string> members;
    for (int m : cr.groups[static_cast<std::size_t>(gi)].members)
      members.push_back(image_ids[static_cast<std::size_t>(m)]);
    jg["members"] = members;
    const bool is_kept = kept.count(gi) > 0;
    jg["kept"] = is_kept;
    if (is_kept) {
      std::string n = std::to_string(fp_index++);
      while (n.size() < 3) n.insert(n.begin(), '0');
      jg["fingerprint_file"] = "fp_" + n + ".ucif";
    }
    j["groups"].push_back(std::move(jg));
  }
  std::vector<std::string> rejected;
  for (int r : cr.rejected_ids) rejected.push_back(image_ids[static_cast<std::size_t>(r)]);
  j["rejected"] = rejected;
  std::ofstream cj(dir / "clusters.json", std::ios::trunc);
  cj << j.dump(2) << '\n';

  std::ofstream tr(dir / "trace.jsonl", std::ios::trunc);
  tr << uci::trace_to_jsonl(cr.trace);
}

int cmd_extract(const Options& opt) {
  const uci::RunParams params = run_params(opt);
  const uci::Scheme scheme = uci::scheme_from_string(opt.scheme);
  const fs::path input(opt.input);
  const uci::Dims crop = parse_dims(opt.crop);

  std::vector<uci::AccountData> accounts;
  if (fs::exists(input / "manifest.json")) {
    const uci::DatasetManifest manifest = uci::load_manifest(input / "manifest.json");
    for (const uci::ManifestAccount& acc : manifest.accounts) {
      uci::AccountData data;
      data.account_id = acc.account_id;
      for (const uci::ManifestImage& img : acc.images) {
        data.image_ids.push_back(img.image_id);
        data.images.push_back(uci::load_luminance(input / img.file, crop));
      }
      accounts.push_back(std::move(data));
    }
  } else if (fs::is_directory(input)) {
    accounts.push_back(load_plain_account(input, crop));
  } else {
    throw uci::ConfigError("input is neither a dataset nor an account directory: " + opt.input);
  }

  const uci::SchemeRun run = uci::run_scheme(accounts, scheme, params);

  // Single-account mode surfaces the account's failure as the command error.
  if (accounts.size() == 1 && !run.accounts[0].error.empty()) {
    throw uci::NotEnoughImages(run.accounts[0].error);
  }

  fs::create_directories(opt.out);
  int failures = 0;
  for (std::size_t i = 0; i < run.accounts.size(); ++i) {
    const uci::AccountResult& res = run.accounts[i];
    if (!res.error.empty()) {
      ++failures;
      std::cerr << "account " << res.account_id << ": " << res.error << "\n";
      fs::create_directories(fs::path(opt.out) / res.account_id);
      continue;
    }
    write_account_outputs(fs::path(opt.out) / res.account_id, res, accounts[i].image_ids,
                          opt.scheme);
  }
  write_run_record(opt, "extract");
  std::cout << "extracted fingerprints for " << (run.accounts.size() - failures) << "/"
            << run.accounts.size() << " accounts\n";
  return 0;
}

int cmd_match(const Options& opt) {
  const fs::path store(opt.input);
  if (!fs::is_directory(store)) throw uci::ConfigError("no such fingerprint store: " + opt.input);

  std::vector<uci::AccountResult> accounts;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(store))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  for (const fs::path& dir : dirs) {
    uci::AccountResult acc;
    acc.account_id = dir.filename().string();
    std::vector<fs::path> fps;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".ucif") fps.push_back(entry.path());
    std::sort(fps.begin(), fps.end());
    for (const fs::path& f : fps) acc.fingerprints.push_back(uci::load_fingerprint(f));
    if (acc.fingerprints.empty()) acc.error = "no fingerprints";
    accounts.push_back(std::move(acc));
  }
  if (accounts.empty()) throw uci::ConfigError("fingerprint store is empty: " + opt.input);

  const uci::ScoreMatrix scores = uci::score_matrix(accounts, opt.workers);
  fs::create_directories(opt.out);
  uci::write_scores_csv(scores, fs::path(opt.out) / "scores.csv");
  uci::write_scores_json(scores, fs::path(opt.out) / "scores.json");

  json decisions = json::array();
  for (const uci::DecidedPair& p : uci::decide_pairs(scores, opt.tau)) {
    decisions.push_back({{"a", p.a}, {"b", p.b}, {"score", p.score}});
  }
  std::ofstream dj(fs::path(opt.out) / "decisions.json", std::ios::trunc);
  dj << decisions.dump(2) << '\n';
  write_run_record(opt, "match");
  std::cout << "scored " << scores.ids.size() << " accounts, " << decisions.size()
            << " decided pairs\n";
  return 0;
}

struct AccountClusters {
  std::string account_id;
  std::vector<std::vector<int>> groups;           // per-account image indices
  std::vector<std::vector<int>> kept_groups;
  std::vector<int> labels;                        // truth camera per image
  std::vector<bool> reposts;
  int total_images = 0;
};

std::optional<AccountClusters> load_account_clusters(const fs::path& dir,
                                                     const uci::ManifestAccount& acc) {
  const fs::path file = dir / "clusters.json";
  if (!fs::exists(file)) return std::nullopt;
  std::ifstream in(file);
  json j;
  in >> j;

  std::map<std::string, int> index;
  AccountClusters out;
  out.account_id = acc.account_id;
  for (const uci::ManifestImage& img : acc.images) {
    index[img.image_id] = static_cast<int>(out.labels.size());
    out.labels.push_back(img.camera_id);
    out.reposts.push_back(img.repost);
  }
  out.total_images = static_cast<int>(out.labels.size());
  for (const json& jg : j.at("groups")) {
    std::vector<int> members;
    for (const std::string& id : jg.at("members").get<std::vector<std::string>>()) {
      const auto it = index.find(id);
      if (it == index.end()) throw uci::Error("clusters.json references unknown image " + id);
      members.push_back(it->second);
    }
    out.groups.push_back(members);
    if (jg.value("kept", false)) out.kept_groups.push_back(std::move(members));
  }
  return out;
}

int cmd_eval(const Options& opt) {
  if (opt.manifest_path.empty() || !fs::exists(opt.manifest_path))
    throw uci::ConfigError("missing manifest: " + opt.manifest_path);
  if (opt.scores_path.empty() || !fs::exists(opt.scores_path))
    throw uci::ConfigError("missing score matrix: " + opt.scores_path);

  const uci::DatasetManifest manifest = uci::load_manifest(opt.manifest_path);
  const uci::ScoreMatrix scores = uci::load_scores_json(opt.scores_path);
  const auto labels = uci::label_matrix(manifest, scores.ids);

  json out;
  const uci::MapResult map = uci::mean_average_precision(scores, labels);
  const uci::RocCurve roc = uci::roc_from_matrix(scores, labels);
  out["identification"] = {{"map", map.map},
                           {"queries", map.queries},
                           {"skipped_queries", map.skipped},
                           {"auc", roc.auc}};

  fs::create_directories(opt.out);
  {
    std::ofstream rc(fs::path(opt.out) / "roc.csv", std::ios::trunc);
    rc << "threshold,fpr,tpr\n";
    rc.precision(17);
    for (const uci::RocPoint& p : roc.points) rc << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
  }

  if (!opt.clusters_dir.empty() && fs::is_directory(opt.clusters_dir)) {
    uci::PairCounts strict_counts, lenient_counts, baseline_counts;
    double strict_major = 0, lenient_major = 0;
    std::uint64_t strict_n = 0, lenient_n = 0;
    std::uint64_t reposted = 0, reposted_removed = 0, own = 0, own_removed = 0;
    int with_clusters = 0;

    for (const uci::ManifestAccount& acc : manifest.accounts) {
      const auto clusters = load_account_clusters(fs::path(opt.clusters_dir) / acc.account_id, acc);
      if (!clusters) continue;
      ++with_clusters;
      const auto& c = *clusters;

      const auto strict = uci::pairwise_precision_recall(c.groups, c.labels, uci::EvalMode::Strict);
      const auto lenient = uci::pairwise_precision_recall(c.groups, c.labels, uci::EvalMode::Lenient);
      strict_counts.tp += strict.counts.tp;
      strict_counts.fp += strict.counts.fp;
      strict_counts.fn += strict.counts.fn;
      strict_counts.tn += strict.counts.tn;
      lenient_counts.tp += lenient.counts.tp;
      lenient_counts.fp += lenient.counts.fp;
      lenient_counts.fn += lenient.counts.fn;
      lenient_counts.tn += lenient.counts.tn;

      strict_major += uci::purity(c.groups, c.labels, uci::EvalMode::Strict) * c.total_images;
      strict_n += static_cast<std::uint64_t>(c.total_images);
      std::uint64_t grouped = 0;
      for (const auto& g : c.groups) grouped += g.size();
      if (grouped > 0) {
        lenient_major += uci::purity(c.groups, c.labels, uci::EvalMode::Lenient) *
                         static_cast<double>(grouped);
        lenient_n += grouped;
      }

      std::vector<std::vector<int>> one_group(1);
      for (int i = 0; i < c.total_images; ++i) one_group[0].push_back(i);
      const auto base = uci::pairwise_precision_recall(one_group, c.labels, uci::EvalMode::Strict);
      baseline_counts.tp += base.counts.tp;
      baseline_counts.fp += base.counts.fp;
      baseline_counts.fn += base.counts.fn;
      baseline_counts.tn += base.counts.tn;

      std::set<int> kept_members;
      for (const auto& g : c.kept_groups) kept_members.insert(g.begin(), g.end());
      for (int i = 0; i < c.total_images; ++i) {
        const bool in_kept = kept_members.count(i) > 0;
        if (c.reposts[static_cast<std::size_t>(i)]) {
          ++reposted;
          if (!in_kept) ++reposted_removed;
        } else {
          ++own;
          if (!in_kept) ++own_removed;
        }
      }
    }

    if (with_clusters > 0) {
      auto ratio = [](std::uint64_t num, std::uint64_t den) -> json {
        if (den == 0) return nullptr;
        return static_cast<double>(num) / static_cast<double>(den);
      };
      out["clustering"] = {
          {"accounts", with_clusters},
          {"strict",
           {{"purity", strict_n ? json(strict_major / static_cast<double>(strict_n)) : json()},
            {"precision", ratio(strict_counts.tp, strict_counts.tp + strict_counts.fp)},
            {"recall", ratio(strict_counts.tp, strict_counts.tp + strict_counts.fn)}}},
          {"lenient",
           {{"purity", lenient_n ? json(lenient_major / static_cast<double>(lenient_n)) : json()},
            {"precision", ratio(lenient_counts.tp, lenient_counts.tp + lenient_counts.fp)},
            {"recall", ratio(lenient_counts.tp, lenient_counts.tp + lenient_counts.fn)}}},
          {"baseline",
           {{"precision", ratio(baseline_counts.tp, baseline_counts.tp + baseline_counts.fp)},
            {"recall", ratio(baseline_counts.tp, baseline_counts.tp + baseline_counts.fn)}}}};
      out["repost"] = {{"removed_ratio", ratio(reposted_removed, reposted)},
                       {"false_rejected_ratio", ratio(own_removed, own)},
                       {"reposted", reposted},
                       {"own", own}};
    }
  }

  std::ofstream mj(fs::path(opt.out) / "metrics.json", std::ios::trunc);
  mj << out.dump(2) << '\n';
  write_run_record(opt, "eval");
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Camera-fingerprint account linkage toolkit"};
  app.set_config("--config");

  app.add_option("--out", opt.out, "output directory");
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--alpha", opt.alpha, "seed/merge correlation threshold");
  app.add_option("--beta", opt.beta, "assignment correlation threshold");
  app.add_option("--lambda", opt.lambda, "minimum kept group size (UCI)");
  app.add_option("--gamma", opt.gamma, "minimum kept group size (MCF)");
  app.add_option("--tau", opt.tau, "pair decision threshold");
  app.add_option("--scheme", opt.scheme, "scf | mcf | uci");
  app.add_option("--crop", opt.crop, "central crop WxH");
  app.add_option("--workers", opt.workers, "worker thread cap (0 = all cores)");
  app.add_option("--protocol", opt.protocol, "offline1 | offline2 | offline3 | online");
  app.add_option("--cameras", opt.cameras, "camera count (offline protocols)");
  app.add_option("--individuals", opt.individuals, "individual count (online protocol)");
  app.add_option("--images", opt.images, "images per camera pool");
  app.add_option("--reposts", opt.reposts, "reposted images per account");
  app.add_option("--sigma-k", opt.sigma_k, "PRNU strength, value or lo:hi range");
  app.add_option("--sigma-eta", opt.sigma_eta, "additive noise sigma");
  app.add_option("--dims", opt.dims, "image size WxH");
  app.add_option("--split", opt.split, "balanced | asymmetric");
  app.add_option("--manifest", opt.manifest_path, "dataset manifest.json (eval)");
  app.add_option("--scores", opt.scores_path, "scores.json from match (eval)");
  app.add_option("--clusters", opt.clusters_dir, "extract output directory (eval)");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  synth->fallthrough();

  CLI::App* extract = app.add_subcommand("extract", "estimate per-account camera fingerprints");
  extract->add_option("input", opt.input, "dataset dir (with manifest.json) or account dir")
      ->required();
  extract->fallthrough();

  CLI::App* match = app.add_subcommand("match", "score account pairs from a fingerprint store");
  match->add_option("input", opt.input, "extract output directory")->required();
  match->fallthrough();

  CLI::App* eval = app.add_subcommand("eval", "evaluate scores and clusterings against truth");
  eval->fallthrough();

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(opt);
    if (extract->parsed()) return cmd_extract(opt);
    if (match->parsed()) return cmd_match(opt);
    if (eval->parsed()) return cmd_eval(opt);
  } catch (const uci::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
