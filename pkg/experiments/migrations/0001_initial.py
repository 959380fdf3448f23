# Generated by Django 4.2.9 on 2024-06-01 12:00

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('subcommand', models.CharField(choices=[('construct', 'Construct'), ('verify', 'Verify'), ('partition', 'Partition'), ('constants', 'Constants'), ('compactness', 'Compactness')], max_length=16)),
                ('config', models.JSONField(default=dict)),
                ('status', models.CharField(choices=[('pass', 'Pass'), ('fail', 'Fail')], max_length=8)),
                ('report_digest', models.CharField(max_length=64)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
    ]
