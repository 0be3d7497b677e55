#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "montok/errors.hpp"
#include "montok/model.hpp"
#include "montok/pipeline.hpp"

namespace {

void encode_stream(const montok::TokenizerModel& model, std::istream& in, std::ostream& out) {
  const montok::Encoder encoder(model);
  std::string line;
  while (std::getline(in, line)) {
    const std::vector<std::int32_t> ids = encoder.encode(line);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out << ' ';
      out << ids[i];
    }
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"montok: comparable monolingual tokenizers and crosslingual compression"};
  app.require_subcommand(1);

  std::string manifest_path;
  montok::RunOptions options;

  const std::map<std::string, std::pair<std::set<montok::Stage>, const char*>> stage_cmds = {
      {"run", {{montok::Stage::train, montok::Stage::evaluate, montok::Stage::profile,
                montok::Stage::fit, montok::Stage::plan, montok::Stage::validate,
                montok::Stage::stats, montok::Stage::report},
               "run every stage of the experiment"}},
      {"train", {{montok::Stage::train}, "train the tokenizer grid"}},
      {"evaluate", {{montok::Stage::evaluate}, "measure compression for trained tokenizers"}},
      {"profile", {{montok::Stage::profile}, "compute per-language predictor profiles"}},
      {"fit", {{montok::Stage::fit}, "fit CTC power-law curves"}},
      {"plan", {{montok::Stage::plan}, "invert fitted curves for the target CTCs"}},
      {"validate", {{montok::Stage::validate}, "retrain at planned vocabularies and score the plan"}},
      {"stats", {{montok::Stage::stats}, "run the significance tests"}},
      {"report", {{montok::Stage::report}, "emit density, box-plot and regression tables"}},
      {"contamination", {{}, "scan training subsets for verbatim eval prefixes"}},
  };
  std::map<std::string, CLI::App*> cmds;
  for (const auto& [name, info] : stage_cmds) {
    CLI::App* cmd = app.add_subcommand(name, info.second);
    cmd->add_option("manifest", manifest_path, "experiment manifest (JSON)")->required();
    cmd->add_option("--jobs", options.jobs, "parallel training jobs")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", options.seed, "override the manifest seed");
    cmd->add_flag("--resume", options.resume, "skip jobs already marked done in the ledger");
    cmds[name] = cmd;
  }

  std::string model_path;
  std::string encode_file;
  CLI::App* encode_cmd = app.add_subcommand("encode", "encode text with a saved model");
  encode_cmd->add_option("model", model_path, "model JSON file")->required();
  encode_cmd->add_option("--file", encode_file, "read text from this file instead of stdin");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(encode_cmd)) {
      const montok::TokenizerModel model = montok::load_model(model_path);
      if (encode_file.empty()) {
        encode_stream(model, std::cin, std::cout);
      } else {
        std::ifstream in(encode_file, std::ios::binary);
        if (!in) throw montok::MissingFile(encode_file);
        encode_stream(model, in, std::cout);
      }
      return 0;
    }
    const montok::ExperimentManifest manifest = montok::load_manifest(manifest_path);
    for (const auto& [name, info] : stage_cmds) {
      if (!app.got_subcommand(cmds.at(name))) continue;
      if (name == "contamination") {
        montok::run_contamination(manifest, options);
      } else {
        montok::run_stages(manifest, options, info.first);
      }
      return 0;
    }
    return 0;
  } catch (const montok::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
