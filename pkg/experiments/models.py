from django.db import models
from django.db.models import JSONField

SUBCOMMANDS = ('construct', 'verify', 'partition', 'constants', 'compactness')


class ExperimentRun(models.Model):
    """
    @atomic-model
    One management command run: its config, outcome and the digest of the report bytes
    """
    STATUS_PASS = 'pass'
    STATUS_FAIL = 'fail'
    STATUS_CHOICES = [(STATUS_PASS, 'Pass'), (STATUS_FAIL, 'Fail')]

    subcommand = models.CharField(max_length=16, choices=[(name, name.title()) for name in SUBCOMMANDS])
    config = JSONField(default=dict)
    status = models.CharField(max_length=8, choices=STATUS_CHOICES)
    report_digest = models.CharField(max_length=64)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f"{self.subcommand} run ({self.status}, {self.created_at})"
