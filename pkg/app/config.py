# The module for application configuration: channel model, topology generation,
# scheduling guards, Monte-Carlo verification and output locations.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0


from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field

from app.models.network import ChannelParams, TopologyParams


class Settings(BaseSettings):
    """
    Defines the application's settings.
    Every value can be overridden from the environment or the .env file;
    the typed parameter objects used by the core modules are derived from
    these top-level fields.
    """
    model_config = SettingsConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        extra='ignore',
        case_sensitive=False
    )

    # --- Channel model (Rayleigh fading, log-distance path loss) ---
    CHANNEL_A_N: float = 67.7328
    CHANNEL_G_N: float = 0.9819
    CHANNEL_GAMMA_PN: float = 4.2935
    CHANNEL_ALPHA: float = 3.3
    CHANNEL_SNR_DB: float = Field(default=60.0, description="Reference SNR of the link model in dB.")
    TRANSMISSION_RANGE: float = 30.0
    INTERFERENCE_RANGE: float = 60.0
    CALIBRATION_PRR: float = Field(default=0.67, description="PRR expected at the edge of the transmission range.")
    CALIBRATION_SNR_DB: float = 60.0

    # --- Topology generation ---
    TOPOLOGY_LAMBDA: float = 0.5
    TOPOLOGY_RADIUS: float = 100.0
    MAX_TOPOLOGY_REDRAWS: int = 1000

    # --- Scheduling guards ---
    LIVELOCK_FACTOR: int = 10
    INCREMENTER_MAX_SLOTS: int = 200_000

    # --- Monte-Carlo verification ---
    MC_TRIALS_SMALL: int = 100_000
    MC_TRIALS_LARGE: int = 10_000
    MC_CONFIDENCE: float = 0.99
    MC_BATCH_SIZE: int = 5_000

    # --- Output locations ---
    RESULTS_DIR: str = "./results"
    SCENARIO_DIR: str = "./scenarios"
    LOG_LEVEL: str = "INFO"

    @property
    def channel_params(self) -> ChannelParams:
        """Builds the channel parameters from the loaded top-level settings."""
        return self.channel_params_for(self.CHANNEL_SNR_DB)

    def channel_params_for(self, snr_db: float) -> ChannelParams:
        """Same as `channel_params`, with the reference SNR replaced."""
        return ChannelParams(
            a_n=self.CHANNEL_A_N,
            g_n=self.CHANNEL_G_N,
            gamma_pn=self.CHANNEL_GAMMA_PN,
            alpha=self.CHANNEL_ALPHA,
            gamma0_db=snr_db,
            r_t=self.TRANSMISSION_RANGE,
            r_i=self.INTERFERENCE_RANGE,
            calibration_prr=self.CALIBRATION_PRR,
            calibration_db=self.CALIBRATION_SNR_DB,
        )

    def topology_params(self, n: int, seed: int) -> TopologyParams:
        """Builds topology parameters for `n` transceivers and a seed."""
        return TopologyParams(
            n=n,
            lam=self.TOPOLOGY_LAMBDA,
            radius=self.TOPOLOGY_RADIUS,
            inner_radius=self.TOPOLOGY_RADIUS / 2 ** 0.5,
            seed=seed,
        )

    def trials_for(self, size: int) -> int:
        """Default Monte-Carlo trial count for a topology size."""
        return self.MC_TRIALS_SMALL if size <= 50 else self.MC_TRIALS_LARGE

# Create the single, globally accessible instance of the settings.
settings = Settings()


# Optional test block to verify configuration loading
if __name__ == '__main__':
    from app.core.logger import console

    console.rule("All Top-Level Configurations Loaded")
    console.display_data_as_table(settings.model_dump(), "All Loaded Settings")

    console.rule("Derived Channel Parameters")
    console.display_data_as_table(settings.channel_params.model_dump(), f"SNR {settings.CHANNEL_SNR_DB} dB")
