// Command-line front end: forward modeling, inversion and the study
// protocols, all driven by flat config files.
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include "lrwi/config.hpp"
#include "lrwi/harness.hpp"
#include "lrwi/version.hpp"

namespace {

using CommandFn = std::function<int(const lrwi::Config&,
                                    const std::filesystem::path&,
                                    std::uint64_t)>;

struct CommandArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = 0;
};

void add_command(CLI::App& app, const std::string& name,
                 const std::string& description, const CommandFn& fn,
                 int& exit_code) {
  auto args = std::make_shared<CommandArgs>();
  CLI::App* sub = app.add_subcommand(name, description);
  sub->add_option("--config", args->config_path, "config file")->required();
  sub->add_option("--out", args->out_dir, "output directory")->required();
  sub->add_option("--seed", args->seed, "base random seed (default 0)");
  sub->callback([&exit_code, fn, args]() {
    const lrwi::Config cfg = lrwi::Config::from_file(args->config_path);
    exit_code = fn(cfg, args->out_dir,
                   static_cast<std::uint64_t>(args->seed));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("lrwi ") + lrwi::kVersion +
               " - frequency-domain seismic inversion toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  add_command(app, "forward", "synthesize observed data",
              lrwi::harness::cmd_forward, exit_code);
  add_command(app, "invert", "run an inversion", lrwi::harness::cmd_invert,
              exit_code);
  add_command(app, "gradcheck", "finite-difference gradient check",
              lrwi::harness::cmd_gradcheck, exit_code);
  add_command(app, "condstudy", "conditioning study over penalty scales",
              lrwi::harness::cmd_condstudy, exit_code);
  add_command(app, "betasweep", "model error over penalty scales",
              lrwi::harness::cmd_betasweep, exit_code);
  add_command(app, "freqsweep", "model error over starting frequencies",
              lrwi::harness::cmd_freqsweep, exit_code);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const lrwi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lrwi::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const lrwi::ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lrwi::SingularityError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const lrwi::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
