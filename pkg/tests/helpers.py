"""测试用的小规模配置"""

from core.config import ModelConfig, TrainConfig


def small_model_config(**overrides) -> ModelConfig:
    values = dict(channels=4, heads=1, ffn_expansion=2.0, encoder_blocks=1, pool_size=8,
                  dark_window_feature=3, guided_radius=2)
    values.update(overrides)
    return ModelConfig(**values)


def small_train_config(steps: int = 3, seed: int = 0, **model_overrides) -> TrainConfig:
    return TrainConfig(epochs=1, batch_size=2, crop_size=16, seed=seed, max_steps=steps,
                       lr_init=1e-3, lr_final=1e-5, model=small_model_config(**model_overrides))
