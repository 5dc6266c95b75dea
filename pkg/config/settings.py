# Default parameters for every experiment. A JSON file passed with --config
# overrides individual keys (see config/loader.py); unknown keys are rejected.

# Grid world: agent has to reach the goal in the bottom-left corner
GRID_WORLD = {
    'width': 16,
    'height': 16,
    'goal': [0, 0],          # (x, y), y = 0 is the bottom row
    'step_reward': -1.0,     # every ordinary step is penalized
    'goal_reward': 9.0,      # collected when acting in the goal cell, then the episode terminates
    'discount': 0.9
}

# Blahut-Arimoto / value iteration settings
BELLMAN = {
    'beta': 10.0,                # inverse temperature
    'inner_tolerance': 5e-3,     # max abs policy-probability change between BA iterations
    'outer_tolerance': 5e-3,     # infinity norm of the value change between VI sweeps
    'max_inner_iters': 1000,
    'max_outer_iters': 1000,
    'warm_start_floor': 1e-10    # uniform mixing weight for warm-started BA inits
}

# Beta sweep behind the state-value comparison chart
BETA_SWEEP = {
    'betas': [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 3.0, 10.0, 30.0, 100.0]
}

# Oracle audit on small random instances
AUDIT = {
    'instances': 50,
    'n_states': 2,
    'n_actions': 2,
    'beta_range': [0.5, 5.0],
    'discount': 0.9,
    'identity_instances': 100,     # instances for the concise-form identity
    'prior_perturbations': 100,
    'gap_horizon': 50,             # check the averaged gap for M = 1..gap_horizon
    'oracle_resolution_2': 1e-3,   # simplex grid resolution for |A| = 2
    'oracle_resolution_3': 1e-2,   # simplex grid resolution for |A| = 3
    'inner_tolerance': 1e-8,       # BA runs compared with the oracle are driven close to the fixed point
    'max_inner_iters': 20000,
    'oracle_tolerance': 1e-3,      # |E_p[B* V] - grid maximum|
    'seed': 0,
    'fault_injection': 'none'      # 'sign_flip' turns the audit into a negative control
}

# Non-sequential problem solved by the rate-distortion command
RATE_DISTORTION = {
    'reward': [[1.0, 0.0], [0.0, 1.0]],   # reward[s][a]
    'state_distribution': [],             # empty: uniform over the rows of reward
    'beta': 50.0
}

# MIRACLE agent (SAC-style actor-critic with a learned marginal prior)
MIRACLE = {
    'reward_scale': 10.0,            # beta, multiplies rewards instead of dividing the penalty
    'discount': 0.99,
    'buffer_capacity': 1000000,
    'minibatch': 256,
    'target_rate': 0.01,             # tau of the exponentially averaged V-target
    'marginal_sample_count': 20,     # N latent samples for the marginal density estimate
    'marginal_buffer_capacity': None,  # None: take the value of the environment entry below
    'prior_mode': 'learned_marginal',  # or 'fixed_uniform' (SAC ablation)
    'learning_rate': 3e-4,
    'hidden_width': 256,
    'warmup_steps': 1000,            # uniform-random actions before the first update
    'log_std_min': -20.0,
    'log_std_max': 2.0,
    'seed': 0
}

# Toy continuous-control environments
ENVIRONMENTS = {
    'point_mass': {
        'dt': 0.05,
        'horizon': 200,
        'position_limit': 2.0,
        'velocity_limit': 2.0,
        'action_cost': 0.1,
        'marginal_buffer_capacity': 1000
    },
    'pendulum_like': {
        'dt': 0.05,
        'substeps': 10,            # semi-implicit Euler sub-steps per control step
        'horizon': 200,
        'gravity': 10.0,
        'mass': 1.0,
        'length': 1.0,
        'max_torque': 4.0,         # below the peak gravity torque, so hanging starts still need a swing
        'max_speed': 8.0,
        'velocity_cost': 0.1,
        'action_cost': 0.001,
        'damping': 0.5,            # 0 gives the conservative rod of the energy check
        'marginal_buffer_capacity': 10000
    }
}

# Training runs
TRAINING = {
    'env': 'point_mass',
    'steps': 30000,
    'seeds': [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
    'trailing_window': 100,        # episodes in the trailing mean
    'checkpoint_interval': 10000,  # steps between checkpoints, 0 disables
    'workers': 1,
    'baseline_seeds': 100
}

# Output location for all generated artifacts
OUTPUT = {
    'out_dir': 'outputs'
}

LOG_LEVEL_ENV = 'MIRL_LOG_LEVEL'
