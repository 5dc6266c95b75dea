# Replay buffers, marginal action model and the MIRACLE actor-critic
