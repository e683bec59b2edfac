from datetime import datetime

import pytz

from config import Config


class TimeManager:
    _timezone = pytz.timezone(Config.TIMEZONE)

    @classmethod
    def get_current_time(cls) -> datetime:
        """Timezone-aware current time"""
        return datetime.now(cls._timezone)

    @classmethod
    def run_stamp(cls) -> str:
        """Compact stamp used in run identifiers"""
        return cls.get_current_time().strftime("%Y%m%d-%H%M%S")
