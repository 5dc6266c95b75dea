# Configuration package for the MI-regularized solver and experiment CLI
