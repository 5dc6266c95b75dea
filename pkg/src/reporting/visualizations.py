import matplotlib
import pandas as pd

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402


def create_sweep_chart(sweep, output_path):
    """Expected state value and mutual information against beta, one line per mode"""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(14, 5))

    for mode, group in sweep.groupby('mode', sort=False):
        group = group.sort_values('beta')
        ax1.plot(group['beta'], group['expected_value'], marker='o', linewidth=2, label=mode)
        ax2.plot(group['beta'], group['mutual_information'], marker='o', linewidth=2, label=mode)

    ax1.set_xscale('log')
    ax1.set_title('Effect of beta on State Values')
    ax1.set_xlabel('beta')
    ax1.set_ylabel('E_p[V]')
    ax1.legend()
    ax1.grid(True, alpha=0.3)

    ax2.set_xscale('log')
    ax2.set_title('Mutual Information of the Final Policy')
    ax2.set_xlabel('beta')
    ax2.set_ylabel('I(S;A) [nats]')
    ax2.legend()
    ax2.grid(True, alpha=0.3)

    plt.tight_layout()
    plt.savefig(output_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return output_path


def create_value_map(values, width, height, output_path):
    """Grid-world values as a heat map; row y = 0 at the bottom"""
    fig, ax = plt.subplots(figsize=(7, 6))
    image = ax.imshow(values[:width * height].reshape(height, width), origin='lower', cmap='viridis')
    fig.colorbar(image, ax=ax, label='V(s)')
    ax.set_title('State Values')
    ax.set_xlabel('x')
    ax.set_ylabel('y')
    plt.savefig(output_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return output_path


def mean_learning_curve(curves):
    """Trailing-mean reward averaged over seeds at every logged step"""
    return pd.concat(curves.values()).groupby('step')['trailing_mean_reward'].mean()


def create_learning_curve_chart(curves_by_mode, baseline, output_path):
    """Seed-mean trailing reward per mode over faint per-seed lines, with the random-policy baseline"""
    fig, ax = plt.subplots(figsize=(10, 6))

    for index, (mode, curves) in enumerate(curves_by_mode.items()):
        color = f'C{index}'
        for curve in curves.values():
            ax.plot(curve['step'], curve['trailing_mean_reward'], linewidth=0.8, alpha=0.2, color=color)
        if not curves:
            continue
        mean_curve = mean_learning_curve(curves)
        ax.plot(mean_curve.index, mean_curve.values, linewidth=2, color=color,
                label=f'{mode} (mean of {len(curves)} seeds)')

    if baseline is not None:
        ax.axhline(y=baseline.mean, color='black', linestyle='--', alpha=0.6, label='random policy')
    ax.set_title('Trailing Mean Episodic Reward')
    ax.set_xlabel('Environment step')
    ax.set_ylabel('Reward')
    ax.legend()
    ax.grid(True, alpha=0.3)

    plt.tight_layout()
    plt.savefig(output_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return output_path
