// Command-line driver: adaptive, uniform and axiom-check runs of the Morley
// discretisation of the von Karman plate equations.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "vkplate/vkplate.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string level_name(const char* stem, int level, const char* ext) {
  return std::string(stem) + "_L" + std::to_string(level) + ext;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Morley FEM for the von Karman plate equations"};

  std::string problem_name = "square-poly";
  std::string mode = "adaptive";
  std::string axiom_refinement = "uniform";
  vkplate::AmfemConfig cfg;
  std::string out_dir = ".";
  bool dump_estimator = false;
  bool svg = false;

  app.add_option("--problem", problem_name, "registered problem: square-poly, square-trig, lshape-f1, biharm-linear");
  app.add_option("--mode", mode, "adaptive | uniform | axiom-check")
      ->check(CLI::IsMember({"adaptive", "uniform", "axiom-check"}));
  app.add_option("--theta", cfg.theta, "bulk parameter in (0, 1]");
  app.add_option("--delta", cfg.delta, "initial mesh-size bound in (0, 1)");
  app.add_option("--levels", cfg.max_levels, "maximum number of solved levels");
  app.add_option("--max-ndofs", cfg.max_ndofs, "stop once the Morley space has this many DOFs");
  app.add_option("--newton-tol", cfg.newton.relative_tol, "Newton residual tolerance, scaled by max(1, load norm)");
  app.add_option("--osc-order", cfg.osc_order, "oscillation order m")->check(CLI::Range(0, 2));
  app.add_option("--axiom-refinement", axiom_refinement, "refinement between axiom-check levels: uniform | adaptive")
      ->check(CLI::IsMember({"uniform", "adaptive"}));
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--dump-estimator", dump_estimator, "write estimator_L<l>.csv per level");
  app.add_flag("--svg", svg, "write mesh_L<l>.svg per level");
  app.set_config("--config", "", "key=value file with the same option names; command line wins");

  CLI11_PARSE(app, argc, argv);

  vkplate::ManufacturedProblem problem;
  try {
    problem = vkplate::find_problem(problem_name);
    cfg.validate();
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  const fs::path dir(out_dir);
  auto observer = [&](const vkplate::LevelSnapshot& snap) {
    {
      auto out = open_output(dir / level_name("mesh", snap.level, ".morleymesh"));
      vkplate::write_mesh(out, *snap.mesh);
    }
    if (svg) {
      auto out = open_output(dir / level_name("mesh", snap.level, ".svg"));
      vkplate::write_svg(out, *snap.mesh);
    }
    if (dump_estimator) {
      auto out = open_output(dir / level_name("estimator", snap.level, ".csv"));
      vkplate::write_estimator_csv(out, *snap.mesh, snap.estimator);
    }
    std::fprintf(stderr, "level %d: %zu triangles, %zu dofs, eta = %.4e, newton %d\n", snap.level,
                 snap.mesh->n_triangles(), snap.space->n_dofs(), snap.estimator.eta(), snap.solve.iterations);
  };

  vkplate::ConvergenceReport report;
  try {
    if (mode == "adaptive") {
      report = vkplate::amfem_run(problem, cfg, observer);
    } else if (mode == "uniform") {
      report = vkplate::uniform_run(problem, cfg, observer);
    } else {
      const auto marking = axiom_refinement == "uniform" ? vkplate::Marking::all : vkplate::Marking::doerfler;
      const auto diags = vkplate::axiom_run(problem, cfg, marking, &report, observer);
      auto out = open_output(dir / "axioms.csv");
      vkplate::write_axioms_csv(out, diags);
    }
    auto out = open_output(dir / "report.csv");
    vkplate::write_report_csv(out, report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }

  vkplate::write_report_csv(std::cout, report);
  if (!report.completed) {
    std::cerr << "error: " << report.diagnostic << '\n';
    return 2;
  }
  return 0;
}
