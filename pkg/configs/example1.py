import math

import ml_collections


def get_config():
    config = ml_collections.ConfigDict()

    ## Plant: single-link arm with a linearizing controller
    config.system = "example1"
    config.a = 9.81 / 2.0
    config.b = 2.0

    ## Certificates
    config.p_matrix = ((2.0, 0.6), (0.6, 3.0))
    config.theta = 10.0
    config.epsilon_min = -20.0
    config.epsilon_max = 0.01
    config.n_par = 21
    config.gamma_tol = 1e-6
    config.n_levels = 0
    config.verify_samples = 10000

    ## Triggering
    config.variant = "iss"
    config.mechanism = "fir"
    config.fir_m = 21
    config.iir_r1 = 0.9
    config.iir_r2 = 0.1
    config.eps_ref = 0.2
    config.delta = 0.999
    config.w_bar = 0.0
    config.c_w = 0.0
    config.c_max = math.inf

    ## Run
    config.x0 = (0.5, 0.5)
    config.horizon = 6.0 * math.pi
    config.disturbance = ml_collections.ConfigDict()
    config.disturbance.kind = "sine"
    config.disturbance.start = 2.0 * math.pi
    config.disturbance.stop = 4.0 * math.pi
    config.disturbance.amplitude = 1.0

    ## Bench
    config.bench_mechanisms = ("fir", "iir", "ref")
    config.baseline = "fixed"
    config.baseline_period = 0.175
    config.csv_stride = 10

    ## T_max surface
    config.surface_gammas = (0.1, 100.0, 41)
    config.surface_lambdas = (0.1, 100.0, 41)

    return config
