// Simulates a small dataset, reconstructs it with zero filling and pISTA-SENSE,
// then fits a desk-sized unrolled ResNet for a few epochs.

#include <pista/pista.hpp>

#include <cstdio>

int main()
{
    using namespace pista;

    PhantomSpec phantom;
    phantom.height = phantom.width = 32;
    phantom.smooth_phase = true;
    AcquisitionSpec acq;
    acq.coils = 4;
    acq.af = 4.0;
    acq.seed = 11;

    const std::vector<Sample> train_set = make_dataset(phantom, acq, 16, 0);
    const std::vector<Sample> test_set = make_dataset(phantom, acq, 4, 1000);

    const ReconReport zf = evaluate(
        test_set, [](const Sample& s) { return sense_adjoint(s.kspace, s.coils, s.mask); }, "zerofill", acq.af);
    const ReconReport ista = evaluate(
        test_set, [](const Sample& s) { return reconstruct_pista(s.kspace, s.coils, s.mask, SolverConfig{}).image; },
        "pista", acq.af);
    std::printf("zero-filled  RLNE %.4f  MSSIM %.4f\n", zf.mean_rlne, zf.mean_mssim);
    std::printf("pISTA-SENSE  RLNE %.4f  MSSIM %.4f\n", ista.mean_rlne, ista.mean_mssim);

    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 1;
    const TrainResult net = train(train_set, cfg, &test_set, [](const EpochReport& r) {
        std::printf("epoch %d  loss %.4f  test RLNE %.4f\n", r.epoch, r.loss, r.validation_rlne);
    });
    const ReconReport learned = evaluate(
        test_set, [&](const Sample& s) { return network_forward(s.kspace, s.coils, s.mask, net.params).back(); },
        "resnet", acq.af);
    std::printf("ResNet       RLNE %.4f  MSSIM %.4f\n", learned.mean_rlne, learned.mean_mssim);
    return 0;
}
