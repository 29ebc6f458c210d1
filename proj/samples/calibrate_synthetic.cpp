// Calibrates an FDR-controlling threshold on synthetic foil-detection data
// and checks the realised FDR on a fresh test split.
//
//   riskctl_sample [alpha] [seed]

#include <cstdio>
#include <cstdlib>

#include "riskctl/riskctl.hpp"

int main(int argc, char** argv) {
    using namespace riskctl;
    const double alpha = argc > 1 ? std::atof(argv[1]) : 0.2;
    simulate::SynthConfig cfg;
    cfg.n_cal = 1000;
    cfg.seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 7;

    const auto [cal_set, test_set] = simulate::generate_detection(cfg);

    calibration::RiskSpec spec;
    spec.risk_kind = calibration::RiskKind::fdr;
    spec.alpha = alpha;
    spec.delta = 0.1;
    try {
        const auto result = riskcal::calibrate_monotone(cal_set, spec);
        const double lambda = *result.lambda_hat;
        std::printf("lambda_hat     %.4f\n", lambda);
        std::printf("calib FDR      %.4f\n", riskcal::empirical_risk(cal_set, lambda, spec));
        std::printf("test FDR       %.4f  (alpha %.2f, delta %.2f)\n", riskcal::empirical_risk(test_set, lambda, spec),
                    alpha, spec.delta);
    } catch (const NoFeasibleLambda& e) {
        std::printf("%s\n", e.what());
        return 2;
    }
    return 0;
}
