# Toy continuous-control environments
