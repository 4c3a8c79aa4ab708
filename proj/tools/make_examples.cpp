// Regenerates the example datasets under data/. Each file is a pure function
// of the seed written next to it in the loop below.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "dispbias/model.hpp"
#include "dispbias/rng.hpp"

using namespace dispbias;

namespace {

struct Example {
  const char* file;
  FamilyPtr family;
  Link mean_link;
  const char* mean;
  std::vector<std::string> mean_params;
  std::vector<double> beta;
  const char* disp;
  std::vector<std::string> disp_params;
  std::vector<double> theta;
  int n;
  std::uint64_t seed;
};

void write(const Example& e, const std::string& dir) {
  const std::vector<std::string> cov{"x1", "x2"};
  ModelSpec m;
  m.family = e.family;
  m.mean_link = e.mean_link;
  m.mean = parse_predictor(e.mean, e.mean_params, cov);
  m.disp = parse_predictor(e.disp, e.disp_params, cov);
  Dataset d;
  d.names = cov;
  d.x.resize(e.n, 2);
  d.y.resize(e.n);
  Rng crng = make_stream(e.seed, 0, 1);
  for (int i = 0; i < e.n; ++i) {
    d.x(i, 0) = uniform_open(crng);
    d.x(i, 1) = uniform_open(crng);
  }
  const VectorXd beta = Eigen::Map<const VectorXd>(e.beta.data(), static_cast<Eigen::Index>(e.beta.size()));
  const VectorXd theta = Eigen::Map<const VectorXd>(e.theta.data(), static_cast<Eigen::Index>(e.theta.size()));
  const DesignState s = design_build(m, d, beta, theta);
  Rng yrng = make_stream(e.seed, 0, 2);
  std::ofstream out(dir + "/" + e.file);
  out << "y,x1,x2\n";
  char buf[96];
  for (int i = 0; i < e.n; ++i) {
    std::snprintf(buf, sizeof buf, "%.10f,%.6f,%.6f\n", m.family->sample(s.mu(i), s.phi(i), yrng),
                  d.x(i, 0), d.x(i, 1));
    out << buf;
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data";
  const std::vector<Example> examples = {
      {"gamma_example.csv", gamma_family(), Link::log(), "b0 + b1*x1", {"b0", "b1"}, {1.0, 0.8},
       "t0 + t1*x2", {"t0", "t1"}, {1.5, 1.0}, 60, 20240101},
      {"normal_example.csv", normal_family(), Link::identity(), "b0 + b1*x1 + b2*x2",
       {"b0", "b1", "b2"}, {2.0, -1.0, 0.5}, "t0", {"t0"}, {1.0}, 40, 20240102},
      {"reciprocal_gamma_example.csv", reciprocal_gamma_family(), Link::sqrt(),
       "b0 + b1*x1 + x2^b2", {"b0", "b1", "b2"}, {0.5, 1.0, 2.0}, "t0 + t1*x1 + x2^t2",
       {"t0", "t1", "t2"}, {1.0, 2.0, 3.0}, 60, 20240103},
  };
  for (const auto& e : examples) write(e, dir);
  std::cout << "wrote " << examples.size() << " datasets to " << dir << "\n";
}
