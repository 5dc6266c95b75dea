# Reverse-mode gradient engine, dense networks, squashed Gaussians, Adam, checkpoints
