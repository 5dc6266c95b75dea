# Calculation modules: probability primitives and Bellman operators
