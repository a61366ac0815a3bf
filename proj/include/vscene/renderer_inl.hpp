#pragma once

namespace vscene {

template <typename AdjointFn>
double render_loss_and_grad(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg,
                            AdjointFn&& make_adjoint, GradientVector& grad) {
    const auto sampled = sample_bank(bank, cfg.k_points);
    Rasterizer raster(raster_input(scene, sampled, cfg), cfg);
    Image adjoint;
    const double loss = make_adjoint(raster.image(), adjoint);
    grad = scene_gradient(scene, sampled, raster.gradient(adjoint));
    return loss;
}

}  // namespace vscene
