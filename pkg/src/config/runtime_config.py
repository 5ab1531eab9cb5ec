"""
Runtime Configuration Management
Provides environment-driven runtime settings (log directory, worker threads,
progress interval, exact-PAM limit).
"""
import os

from dotenv import load_dotenv

load_dotenv()


class RuntimeConfig:
    def __init__(self):
        self.log_dir = os.getenv("PROFILE_LMM_LOG_DIR", ".logs")
        self.workers = int(os.getenv("PROFILE_LMM_WORKERS", "1"))
        self.progress_every = int(os.getenv("PROFILE_LMM_PROGRESS_EVERY", "100"))
        self.max_exact_pam = int(os.getenv("PROFILE_LMM_MAX_EXACT_PAM", "12000"))

    def update(self, **kwargs):
        for key, value in kwargs.items():
            if hasattr(self, key) and value is not None:
                setattr(self, key, value)

    def as_dict(self):
        return {
            "log_dir": self.log_dir,
            "workers": self.workers,
            "progress_every": self.progress_every,
            "max_exact_pam": self.max_exact_pam,
        }
