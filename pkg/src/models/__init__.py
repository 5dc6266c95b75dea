# Model modules: MDPs, value iteration, audit and training
