import ml_collections


def get_config():
    config = ml_collections.ConfigDict()

    config.system = "example2"
    # sublevel: ranges valid on {1.5 |x|^2 <= c}; printed: c/7 and 3c/14
    config.embedding = "sublevel"

    ## Certificates
    config.p_matrix = ((1.5, 0.0), (0.0, 1.5))
    config.theta = 2.0
    config.epsilon_min = -15.0
    config.epsilon_max = 1.0
    config.n_par = 20
    config.gamma_tol = 1e-6
    config.n_levels = 40
    config.verify_samples = 10000

    ## Triggering
    config.variant = "ras"
    config.mechanism = "iir"
    config.fir_m = 21
    config.iir_r1 = 0.9
    config.iir_r2 = 0.1
    config.eps_ref = 1.0
    config.delta = 0.999
    config.w_bar = 0.4
    config.c_w = 0.64
    config.c_max = 37.87

    ## Run
    config.x0 = (4.0, -3.0)
    config.horizon = 15.0
    config.disturbance = ml_collections.ConfigDict()
    config.disturbance.kind = "constant"
    config.disturbance.start = 5.3
    config.disturbance.stop = 8.0
    config.disturbance.amplitude = 0.4

    ## Bench
    config.bench_mechanisms = ("fir", "iir", "ref")
    config.baseline = "level_adaptive"
    config.baseline_period = 0.0
    config.csv_stride = 50

    ## T_max surface
    config.surface_gammas = (0.1, 100.0, 41)
    config.surface_lambdas = (0.1, 100.0, 41)

    return config
